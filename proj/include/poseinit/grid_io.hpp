#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <json.hpp>

namespace poseinit::grid_io {

/// Sidecar + payload pair shared by volumes and detector images:
///   <base>.json  {"dims": [nx, ny, nz], "spacing_mm": s, ...extra}
///   <base>.raw   nx*ny*nz little-endian float32, x fastest.
struct RawGrid {
    std::array<int, 3> dims{0, 0, 0};
    double spacing_mm = 0.0;
    std::vector<float> data;
    nlohmann::json header;
};

std::filesystem::path strip_extension(const std::filesystem::path& base);

/// extra is merged into the sidecar (dims and spacing_mm take precedence).
void write(const std::filesystem::path& base, const std::array<int, 3>& dims, double spacing_mm,
           const std::vector<float>& data, const nlohmann::json& extra = nlohmann::json::object());

RawGrid read(const std::filesystem::path& base);

void write_f32_le(std::ostream& out, const std::vector<float>& data);
std::vector<float> read_f32_le(std::istream& in, std::size_t count);

}  // namespace poseinit::grid_io
