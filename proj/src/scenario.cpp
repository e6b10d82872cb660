#include "skyfed/scenario.hpp"

#include "skyfed/error.hpp"
#include "skyfed/rng.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace skyfed {

const Vec2& Trajectory::position_at_round(int round) const {
    auto idx = static_cast<std::size_t>((round - 1) / dwell);
    if (idx >= waypoints.size()) idx = waypoints.size() - 1;
    return waypoints[idx];
}

std::vector<Vec2> Trajectory::expand(int horizon) const {
    if (waypoints.empty()) throw ValidationError("waypoints", "trajectory is empty");
    if (static_cast<long>(waypoints.size()) * dwell < horizon)
        throw ValidationError("horizon", "trajectory covers fewer rounds than the horizon");
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) out.push_back(position_at_round(t));
    return out;
}

double Scenario::effective_learning_rate() const {
    return learning_rate.value_or(1.0 / constants.lipschitz);
}

long Scenario::total_samples() const {
    long d = 0;
    for (const auto& dev : devices) d += dev.dataset_size;
    return d;
}

std::vector<Vec2> Scenario::device_positions(int round) const {
    std::vector<Vec2> out;
    out.reserve(devices.size());
    for (const auto& dev : devices) out.push_back(dev.position + (round - 1) * dev.velocity);
    return out;
}

std::vector<std::vector<Vec2>> Scenario::device_traces() const {
    std::vector<std::vector<Vec2>> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) out.push_back(device_positions(t));
    return out;
}

double psnr_to_variance(double psnr_db, double peak) {
    return peak * peak * std::pow(10.0, -psnr_db / 10.0);
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
        throw ParseError(line, "'" + key + "' expects a finite number, got '" + v + "'");
    return x;
}

long to_long(const std::string& v, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw ParseError(line, "'" + key + "' expects an integer, got '" + v + "'");
    return x;
}

std::uint64_t to_u64(const std::string& v, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE)
        throw ParseError(line, "'" + key + "' expects an unsigned integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(line, "'" + key + "' expects true/false, got '" + v + "'");
}

struct PendingDevice {
    DeviceState state;
    bool has_fading = false;
    std::optional<double> psnr_db;
    bool has_noise_var = false;
    std::set<std::string> seen;
};

using Setter = std::function<void(const std::string&, int)>;

}  // namespace

Scenario parse_scenario(std::string_view text) {
    return parse_scenario(text, std::nullopt);
}

Scenario parse_scenario(std::string_view text, std::optional<std::uint64_t> seed_override) {
    Scenario s;
    std::vector<PendingDevice> devices;
    std::string section;
    std::set<std::string> seen;  // "section.key" for singleton sections

    auto& run = s;
    auto& r = s.radio;
    auto& c = s.constants;

    std::map<std::string, std::map<std::string, Setter>> table;
    auto& trun = table["run"];
    trun["horizon"] = [&](const std::string& v, int ln) { run.horizon = static_cast<int>(to_long(v, ln, "horizon")); };
    trun["dwell"] = [&](const std::string& v, int ln) { run.dwell = static_cast<int>(to_long(v, ln, "dwell")); };
    trun["v_max"] = [&](const std::string& v, int ln) { run.v_max = to_double(v, ln, "v_max"); };
    trun["seed"] = [&](const std::string& v, int ln) { run.seed = to_u64(v, ln, "seed"); };
    trun["learning_rate"] = [&](const std::string& v, int ln) { run.learning_rate = to_double(v, ln, "learning_rate"); };
    trun["target_loss"] = [&](const std::string& v, int ln) { run.target_loss = to_double(v, ln, "target_loss"); };
    trun["dataset"] = [&](const std::string& v, int ln) {
        if (v == "synthetic") run.dataset.kind = DatasetKind::kSynthetic;
        else if (v == "idx") run.dataset.kind = DatasetKind::kIdx;
        else throw ParseError(ln, "dataset must be synthetic or idx");
    };
    trun["idx_images"] = [&](const std::string& v, int) { run.dataset.idx_images = v; };
    trun["idx_labels"] = [&](const std::string& v, int) { run.dataset.idx_labels = v; };
    trun["classes"] = [&](const std::string& v, int ln) { run.dataset.classes = static_cast<int>(to_long(v, ln, "classes")); };
    trun["label_skew"] = [&](const std::string& v, int ln) { run.dataset.label_skew = to_double(v, ln, "label_skew"); };
    trun["peak"] = [&](const std::string& v, int ln) { run.dataset.peak = to_double(v, ln, "peak"); };
    trun["model"] = [&](const std::string& v, int ln) {
        if (v == "quadratic") run.model.kind = ModelKind::kQuadratic;
        else if (v == "logistic") run.model.kind = ModelKind::kLogistic;
        else if (v == "tiny-mlp") run.model.kind = ModelKind::kTinyMlp;
        else throw ParseError(ln, "model must be quadratic, logistic or tiny-mlp");
    };
    trun["l2"] = [&](const std::string& v, int ln) { run.model.l2 = to_double(v, ln, "l2"); };
    trun["hidden"] = [&](const std::string& v, int ln) { run.model.hidden = static_cast<int>(to_long(v, ln, "hidden")); };
    trun["trust_radius"] = [&](const std::string& v, int ln) { run.solver.trust_radius = to_double(v, ln, "trust_radius"); };
    trun["delta"] = [&](const std::string& v, int ln) { run.solver.delta = to_double(v, ln, "delta"); };
    trun["max_iters"] = [&](const std::string& v, int ln) { run.solver.max_iters = static_cast<int>(to_long(v, ln, "max_iters")); };
    trun["horizon_iters"] = [&](const std::string& v, int ln) { run.solver.horizon_iters = static_cast<int>(to_long(v, ln, "horizon_iters")); };
    trun["horizon_step"] = [&](const std::string& v, int ln) { run.solver.horizon_step = to_double(v, ln, "horizon_step"); };
    trun["projection"] = [&](const std::string& v, int ln) {
        if (v == "radial") run.solver.projection = ProjectionMode::kRadial;
        else if (v == "componentwise") run.solver.projection = ProjectionMode::kComponentwise;
        else throw ParseError(ln, "projection must be radial or componentwise");
    };
    trun["closed_loop"] = [&](const std::string& v, int ln) { run.solver.closed_loop = to_bool(v, ln, "closed_loop"); };

    auto& trad = table["radio"];
    trad["theta"] = [&](const std::string& v, int ln) { r.waterfall = to_double(v, ln, "theta"); };
    trad["bandwidth"] = [&](const std::string& v, int ln) { r.bandwidth = to_double(v, ln, "bandwidth"); };
    trad["noise_psd"] = [&](const std::string& v, int ln) { r.noise_psd = to_double(v, ln, "noise_psd"); };
    trad["noise_psd_dbm"] = [&](const std::string& v, int ln) {
        r.noise_psd = std::pow(10.0, to_double(v, ln, "noise_psd_dbm") / 10.0);
    };
    trad["pathloss_exp"] = [&](const std::string& v, int ln) { r.pathloss_exp = to_double(v, ln, "pathloss_exp"); };
    trad["carrier"] = [&](const std::string& v, int ln) { r.carrier = to_double(v, ln, "carrier"); };
    trad["extra_loss_los"] = [&](const std::string& v, int ln) { r.extra_loss_los = to_double(v, ln, "extra_loss_los"); };
    trad["extra_loss_nlos"] = [&](const std::string& v, int ln) { r.extra_loss_nlos = to_double(v, ln, "extra_loss_nlos"); };
    trad["los_a"] = [&](const std::string& v, int ln) { r.los_a = to_double(v, ln, "los_a"); };
    trad["los_b"] = [&](const std::string& v, int ln) { r.los_b = to_double(v, ln, "los_b"); };
    trad["altitude"] = [&](const std::string& v, int ln) { r.altitude = to_double(v, ln, "altitude"); };
    trad["light_speed"] = [&](const std::string& v, int ln) { r.light_speed = to_double(v, ln, "light_speed"); };
    trad["los_model"] = [&](const std::string& v, int ln) {
        if (v == "los") r.los_model = LosModel::kAlwaysLos;
        else if (v == "mixture") r.los_model = LosModel::kMixture;
        else throw ParseError(ln, "los_model must be los or mixture");
    };

    auto& tlrn = table["learning"];
    tlrn["L"] = [&](const std::string& v, int ln) { c.lipschitz = to_double(v, ln, "L"); };
    tlrn["mu"] = [&](const std::string& v, int ln) { c.strong_convexity = to_double(v, ln, "mu"); };
    tlrn["c1"] = [&](const std::string& v, int ln) { c.c1 = to_double(v, ln, "c1"); };
    tlrn["c2"] = [&](const std::string& v, int ln) { c.c2 = to_double(v, ln, "c2"); };
    tlrn["eta"] = [&](const std::string& v, int ln) { c.eta = to_double(v, ln, "eta"); };
    tlrn["M"] = [&](const std::string& v, int ln) { c.feature_dim = to_long(v, ln, "M"); };

    auto dev = [&]() -> PendingDevice& { return devices.back(); };
    auto& tdev = table["device"];
    tdev["id"] = [&](const std::string& v, int ln) { dev().state.id = static_cast<int>(to_long(v, ln, "id")); };
    tdev["x"] = [&](const std::string& v, int ln) { dev().state.position.x() = to_double(v, ln, "x"); };
    tdev["y"] = [&](const std::string& v, int ln) { dev().state.position.y() = to_double(v, ln, "y"); };
    tdev["vx"] = [&](const std::string& v, int ln) { dev().state.velocity.x() = to_double(v, ln, "vx"); };
    tdev["vy"] = [&](const std::string& v, int ln) { dev().state.velocity.y() = to_double(v, ln, "vy"); };
    tdev["dataset_size"] = [&](const std::string& v, int ln) { dev().state.dataset_size = to_long(v, ln, "dataset_size"); };
    tdev["noise_var"] = [&](const std::string& v, int ln) {
        dev().state.noise_var = to_double(v, ln, "noise_var");
        dev().has_noise_var = true;
    };
    tdev["psnr_db"] = [&](const std::string& v, int ln) { dev().psnr_db = to_double(v, ln, "psnr_db"); };
    tdev["tx_power"] = [&](const std::string& v, int ln) { dev().state.tx_power = to_double(v, ln, "tx_power"); };
    tdev["fading_mean"] = [&](const std::string& v, int ln) {
        dev().state.fading_mean = to_double(v, ln, "fading_mean");
        dev().has_fading = true;
    };
    tdev["per_override"] = [&](const std::string& v, int ln) { dev().state.per_override = to_double(v, ln, "per_override"); };

    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') throw ParseError(line, "unterminated section header");
            section = trim(body.substr(1, body.size() - 2));
            if (!table.count(section)) throw ParseError(line, "unknown section [" + section + "]");
            if (section == "device") devices.emplace_back();
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ParseError(line, "empty key");
        if (section.empty()) throw ParseError(line, "key '" + key + "' outside of any section");
        auto& keys = table[section];
        auto it = keys.find(key);
        if (it == keys.end()) throw ParseError(line, "unknown key '" + key + "' in [" + section + "]");
        auto& seen_set = section == "device" ? dev().seen : seen;
        std::string tag = section == "device" ? key : section + "." + key;
        if (!seen_set.insert(tag).second) throw ParseError(line, "duplicate key '" + key + "'");
        it->second(value, line);
    }

    if (seed_override) s.seed = *seed_override;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        auto& p = devices[i];
        if (!p.seen.count("id")) p.state.id = static_cast<int>(i + 1);
        if (p.psnr_db) {
            if (p.has_noise_var) throw ValidationError("noise_var", "device sets both noise_var and psnr_db");
            p.state.noise_var = psnr_to_variance(*p.psnr_db, s.dataset.peak);
        }
        if (!p.has_fading) {
            // Fading mean is drawn from U[0.1, 1] when not given, fixed per device.
            auto rng = seeded_rng(s.seed, "fading", {static_cast<std::uint64_t>(i)});
            p.state.fading_mean = rng.uniform(0.1, 1.0);
        }
        s.devices.push_back(p.state);
    }
    validate(s);
    return s;
}

Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), seed_override);
}

void validate(const Scenario& s) {
    auto require = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ValidationError(field, what);
    };
    require(!s.devices.empty(), "device", "at least one [device] block is required");
    std::set<int> ids;
    for (const auto& d : s.devices) {
        require(ids.insert(d.id).second, "id", "device ids must be unique");
        require(d.dataset_size >= 1, "dataset_size", "D_i must be >= 1");
        require(d.noise_var >= 0.0, "noise_var", "sigma_i^2 must be >= 0");
        require(d.tx_power > 0.0, "tx_power", "rho_i must be > 0");
        require(d.fading_mean > 0.0 && d.fading_mean <= 1.0, "fading_mean", "nu_i must lie in (0, 1]");
        require(d.position.allFinite() && d.velocity.allFinite(), "position", "must be finite");
        if (d.per_override)
            require(*d.per_override >= 0.0 && *d.per_override < 1.0, "per_override", "must lie in [0, 1)");
    }
    const auto& r = s.radio;
    require(r.waterfall > 0, "theta", "must be > 0");
    require(r.bandwidth > 0, "bandwidth", "must be > 0");
    require(r.noise_psd > 0, "noise_psd", "must be > 0");
    require(r.pathloss_exp > 0, "pathloss_exp", "must be > 0");
    require(r.carrier > 0, "carrier", "must be > 0");
    require(r.extra_loss_los > 0, "extra_loss_los", "must be > 0");
    require(r.extra_loss_nlos > 0, "extra_loss_nlos", "must be > 0");
    require(r.los_a >= 0, "los_a", "must be >= 0");
    require(r.los_b >= 0, "los_b", "must be >= 0");
    require(r.altitude > 0, "altitude", "must be > 0");
    require(r.light_speed > 0, "light_speed", "must be > 0");
    const auto& c = s.constants;
    require(c.lipschitz > 0, "L", "must be > 0");
    require(c.strong_convexity > 0 && c.strong_convexity <= c.lipschitz, "mu", "must satisfy 0 < mu <= L");
    require(c.c1 > 0, "c1", "must be > 0");
    require(c.c2 > 0, "c2", "must be > 0");
    require(c.eta > 0, "eta", "must be > 0");
    require(c.feature_dim >= 1, "M", "must be >= 1");
    require(s.horizon >= 1, "horizon", "T must be >= 1");
    require(s.dwell >= 1, "dwell", "kappa must be >= 1");
    require(s.horizon % s.dwell == 0, "horizon", "T must be divisible by kappa");
    require(s.v_max >= 0, "v_max", "must be >= 0");
    if (s.learning_rate) require(*s.learning_rate > 0, "learning_rate", "must be > 0");
    require(s.dataset.classes >= 1, "classes", "must be >= 1");
    require(s.dataset.label_skew >= 0 && s.dataset.label_skew <= 1, "label_skew", "must lie in [0, 1]");
    require(s.dataset.peak > 0, "peak", "must be > 0");
    if (s.dataset.kind == DatasetKind::kIdx)
        require(!s.dataset.idx_images.empty() && !s.dataset.idx_labels.empty(), "idx_images",
                "idx datasets need idx_images and idx_labels");
    require(s.model.l2 >= 0, "l2", "must be >= 0");
    require(s.model.hidden >= 1, "hidden", "must be >= 1");
    require(s.solver.trust_radius > 0, "trust_radius", "must be > 0");
    require(s.solver.delta > 0, "delta", "must be > 0");
    require(s.solver.max_iters >= 1, "max_iters", "must be >= 1");
    require(s.solver.horizon_iters >= 0, "horizon_iters", "must be >= 0");
    require(s.solver.horizon_step > 0, "horizon_step", "must be > 0");
}

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream o;
    const char* model = s.model.kind == ModelKind::kQuadratic ? "quadratic"
                        : s.model.kind == ModelKind::kLogistic ? "logistic"
                                                               : "tiny-mlp";
    o << "[run]\n"
      << "horizon = " << s.horizon << "\n"
      << "dwell = " << s.dwell << "\n"
      << "v_max = " << num(s.v_max) << "\n"
      << "seed = " << s.seed << "\n";
    if (s.learning_rate) o << "learning_rate = " << num(*s.learning_rate) << "\n";
    if (s.target_loss) o << "target_loss = " << num(*s.target_loss) << "\n";
    o << "dataset = " << (s.dataset.kind == DatasetKind::kIdx ? "idx" : "synthetic") << "\n";
    if (!s.dataset.idx_images.empty()) o << "idx_images = " << s.dataset.idx_images << "\n";
    if (!s.dataset.idx_labels.empty()) o << "idx_labels = " << s.dataset.idx_labels << "\n";
    o << "classes = " << s.dataset.classes << "\n"
      << "label_skew = " << num(s.dataset.label_skew) << "\n"
      << "peak = " << num(s.dataset.peak) << "\n"
      << "model = " << model << "\n"
      << "l2 = " << num(s.model.l2) << "\n"
      << "hidden = " << s.model.hidden << "\n"
      << "trust_radius = " << num(s.solver.trust_radius) << "\n"
      << "delta = " << num(s.solver.delta) << "\n"
      << "max_iters = " << s.solver.max_iters << "\n"
      << "horizon_iters = " << s.solver.horizon_iters << "\n"
      << "horizon_step = " << num(s.solver.horizon_step) << "\n"
      << "projection = " << (s.solver.projection == ProjectionMode::kRadial ? "radial" : "componentwise") << "\n"
      << "closed_loop = " << (s.solver.closed_loop ? "true" : "false") << "\n\n";
    const auto& r = s.radio;
    o << "[radio]\n"
      << "theta = " << num(r.waterfall) << "\n"
      << "bandwidth = " << num(r.bandwidth) << "\n"
      << "noise_psd = " << num(r.noise_psd) << "\n"
      << "pathloss_exp = " << num(r.pathloss_exp) << "\n"
      << "carrier = " << num(r.carrier) << "\n"
      << "extra_loss_los = " << num(r.extra_loss_los) << "\n"
      << "extra_loss_nlos = " << num(r.extra_loss_nlos) << "\n"
      << "los_a = " << num(r.los_a) << "\n"
      << "los_b = " << num(r.los_b) << "\n"
      << "altitude = " << num(r.altitude) << "\n"
      << "light_speed = " << num(r.light_speed) << "\n"
      << "los_model = " << (r.los_model == LosModel::kAlwaysLos ? "los" : "mixture") << "\n\n";
    const auto& c = s.constants;
    o << "[learning]\n"
      << "L = " << num(c.lipschitz) << "\n"
      << "mu = " << num(c.strong_convexity) << "\n"
      << "c1 = " << num(c.c1) << "\n"
      << "c2 = " << num(c.c2) << "\n"
      << "eta = " << num(c.eta) << "\n"
      << "M = " << c.feature_dim << "\n";
    for (const auto& d : s.devices) {
        o << "\n[device]\n"
          << "id = " << d.id << "\n"
          << "x = " << num(d.position.x()) << "\n"
          << "y = " << num(d.position.y()) << "\n"
          << "vx = " << num(d.velocity.x()) << "\n"
          << "vy = " << num(d.velocity.y()) << "\n"
          << "dataset_size = " << d.dataset_size << "\n"
          << "noise_var = " << num(d.noise_var) << "\n"
          << "tx_power = " << num(d.tx_power) << "\n"
          << "fading_mean = " << num(d.fading_mean) << "\n";
        if (d.per_override) o << "per_override = " << num(*d.per_override) << "\n";
    }
    return o.str();
}

}  // namespace skyfed
