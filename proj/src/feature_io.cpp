#include <algorithm>
#include <istream>
#include <ostream>

#include "fedprov/error.hpp"
#include "fedprov/features.hpp"
#include "fedprov/serialize.hpp"

namespace fedprov {

namespace {
constexpr char kMagic[4] = {'F', 'P', 'F', 'S'};
constexpr std::uint16_t kVersion = 1;

void put_reals(std::ostream& out, const std::vector<double>& v) {
    binio::put_u32(out, static_cast<std::uint32_t>(v.size()));
    for (double x : v) binio::put_f64(out, x);
}

std::vector<double> get_reals(std::istream& in) {
    std::vector<double> v(binio::get_u32(in));
    for (double& x : v) x = binio::get_f64(in);
    return v;
}
}  // namespace

nlohmann::json feature_set_to_json(const FeatureSet& f) {
    nlohmann::json j;
    j["signv"] = f.signv;
    j["sortv"] = f.sortv;
    j["classv"] = f.classv;
    j["cam"] = f.cam;
    j["featv"] = f.featv;
    return j;
}

FeatureSet feature_set_from_json(const nlohmann::json& j) {
    try {
        FeatureSet f;
        f.signv = j.at("signv").get<std::vector<std::int8_t>>();
        f.sortv = j.at("sortv").get<std::vector<std::uint32_t>>();
        f.classv = j.at("classv").get<std::vector<double>>();
        f.cam = j.value("cam", std::vector<std::vector<double>>{});
        f.featv = j.value("featv", std::vector<double>{});
        for (auto s : f.signv)
            if (s < -1 || s > 1) throw Error(ErrorKind::parse, "signv entry outside {-1,0,1}");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("feature set: ") + e.what());
    }
}

void write_feature_set(std::ostream& out, const FeatureSet& f) {
    out.write(kMagic, 4);
    binio::put_u16(out, kVersion);
    binio::put_u32(out, static_cast<std::uint32_t>(f.signv.size()));
    for (auto s : f.signv) binio::put_u8(out, static_cast<std::uint8_t>(s + 1));
    binio::put_u32(out, static_cast<std::uint32_t>(f.sortv.size()));
    for (auto r : f.sortv) binio::put_u32(out, r);
    put_reals(out, f.classv);
    binio::put_u32(out, static_cast<std::uint32_t>(f.cam.size()));
    for (const auto& a : f.cam) put_reals(out, a);
    put_reals(out, f.featv);
}

FeatureSet read_feature_set(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
        throw Error(ErrorKind::parse, "bad magic: not a FPFS feature file");
    const auto version = binio::get_u16(in);
    if (version != kVersion) throw Error(ErrorKind::parse, "unsupported FPFS version " + std::to_string(version));
    FeatureSet f;
    f.signv.resize(binio::get_u32(in));
    for (auto& s : f.signv) {
        const auto b = binio::get_u8(in);
        if (b > 2) throw Error(ErrorKind::parse, "signv entry outside {-1,0,1}");
        s = static_cast<std::int8_t>(b) - 1;
    }
    f.sortv.resize(binio::get_u32(in));
    for (auto& r : f.sortv) r = binio::get_u32(in);
    f.classv = get_reals(in);
    f.cam.resize(binio::get_u32(in));
    for (auto& a : f.cam) a = get_reals(in);
    f.featv = get_reals(in);
    return f;
}

}  // namespace fedprov
