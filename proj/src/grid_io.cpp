#include "poseinit/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "poseinit/errors.hpp"

namespace poseinit::grid_io {

namespace fs = std::filesystem;

namespace {

fs::path with_suffix(const fs::path& base, const char* suffix) {
    fs::path p = base;
    p += suffix;
    return p;
}

std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

}  // namespace

fs::path strip_extension(const fs::path& base) {
    const auto ext = base.extension();
    if (ext == ".json" || ext == ".raw") {
        fs::path p = base;
        return p.replace_extension();
    }
    return base;
}

void write_f32_le(std::ostream& out, const std::vector<float>& data) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(float)));
    } else {
        for (float f : data) {
            std::uint32_t u = byteswap32(std::bit_cast<std::uint32_t>(f));
            out.write(reinterpret_cast<const char*>(&u), 4);
        }
    }
}

std::vector<float> read_f32_le(std::istream& in, std::size_t count) {
    std::vector<float> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
        throw IoError("payload shorter than expected: wanted " + std::to_string(count * 4) +
                      " bytes, got " + std::to_string(in.gcount()));
    }
    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : data) {
            f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
        }
    }
    return data;
}

void write(const fs::path& base_in, const std::array<int, 3>& dims, double spacing_mm,
           const std::vector<float>& data, const nlohmann::json& extra) {
    const fs::path base = strip_extension(base_in);
    const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    if (data.size() != n) {
        throw std::invalid_argument("grid_io::write: data length does not match dims");
    }
    if (base.has_parent_path()) {
        fs::create_directories(base.parent_path());
    }

    nlohmann::json header = extra.is_object() ? extra : nlohmann::json::object();
    header["dims"] = {dims[0], dims[1], dims[2]};
    header["spacing_mm"] = spacing_mm;

    const fs::path json_path = with_suffix(base, ".json");
    std::ofstream js(json_path);
    if (!js) {
        throw IoError("cannot write " + json_path.string());
    }
    js << header.dump(2) << '\n';

    const fs::path raw_path = with_suffix(base, ".raw");
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) {
        throw IoError("cannot write " + raw_path.string());
    }
    write_f32_le(raw, data);
    if (!raw) {
        throw IoError("write failed for " + raw_path.string());
    }
}

RawGrid read(const fs::path& base_in) {
    const fs::path base = strip_extension(base_in);
    const fs::path json_path = with_suffix(base, ".json");
    const fs::path raw_path = with_suffix(base, ".raw");

    std::ifstream js(json_path);
    if (!js) {
        throw IoError("cannot open " + json_path.string());
    }
    RawGrid g;
    try {
        js >> g.header;
        const auto& d = g.header.at("dims");
        if (!d.is_array() || d.size() != 3) {
            throw IoError("malformed header " + json_path.string() + ": dims must have 3 entries");
        }
        for (int a = 0; a < 3; ++a) {
            g.dims[a] = d.at(a).get<int>();
            if (g.dims[a] < 1) {
                throw IoError("malformed header " + json_path.string() + ": non-positive dim");
            }
        }
        g.spacing_mm = g.header.at("spacing_mm").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed header " + json_path.string() + ": " + e.what());
    }

    const std::size_t count = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
    std::error_code ec;
    const auto size = fs::file_size(raw_path, ec);
    if (ec) {
        throw IoError("cannot open " + raw_path.string());
    }
    if (size != count * sizeof(float)) {
        throw IoError("size mismatch for " + raw_path.string() + ": header implies " +
                      std::to_string(count * sizeof(float)) + " bytes, file has " +
                      std::to_string(size));
    }
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) {
        throw IoError("cannot open " + raw_path.string());
    }
    g.data = read_f32_le(raw, count);
    return g;
}

}  // namespace poseinit::grid_io
