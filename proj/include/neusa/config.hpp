// Run configuration: flat key = value text with one section per module.
// Unknown sections or keys are errors. A config names a problem preset and
// overrides any subset of its fields; serialization is canonical so equal
// configs hash identically.

#pragma once

#include "neusa/model.hpp"
#include "neusa/training.hpp"

#include <map>
#include <sstream>

namespace neusa {

struct RunConfig {
    // [run]
    std::string problem = "sinegordon";
    std::uint64_t seed = 0;
    std::string out = "runs/out";
    int csv_precision = 17;
    // [model]
    std::vector<int> modes{64};
    int time_samples = 65;
    double horizon = 3.0;
    double epsilon = 0.1;
    int hidden_width = 256;
    int dimwise_layers = 2;
    bool learn_basis = false;
    double sigma = 0.1;
    double nu = 0.05;
    bool burgers_printed_ic = true;
    double extension = 2.0;
    // [train]
    int steps = 300;
    double lr = 1e-2;
    int metric_every = 25;
    std::string collocation = "full"; // or subsample:<count>
    // [reference]
    double ref_dt = 1e-3;
    // [evaluate]
    int snapshots = 5;
    double extrapolation_factor = 2.0;

    bool operator==(const RunConfig&) const = default;
};

inline std::vector<std::string> preset_names() {
    return {"sinegordon", "burgers2d", "wave3layer",
            "sinegordon_paper", "burgers2d_paper", "wave3layer_paper"};
}

// Desk-scale presets are sized for CPU runs; *_paper presets retain the
// paper-scale settings (201x201 modes, thousands of steps) and are expensive.
inline RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.problem = name;
    if (name == "sinegordon") {
        c.modes = {64};
        c.time_samples = 65;
        c.horizon = 3.0;
        c.epsilon = 0.1;
        c.steps = 300;
        c.lr = 1e-2;
        c.ref_dt = 1e-3;
    } else if (name == "burgers2d") {
        c.modes = {48, 48};
        c.time_samples = 33;
        c.horizon = 0.5;
        c.epsilon = 0.1;
        c.nu = 0.05;
        c.steps = 200;
        c.lr = 1e-3; // larger rates over-fit the training window at desk scale
        c.ref_dt = 1e-3;
    } else if (name == "wave3layer") {
        c.modes = {64, 64};
        c.time_samples = 26;
        c.horizon = 1.0;
        c.epsilon = 1.0;
        c.steps = 500;
        c.lr = 1e-2;
        c.ref_dt = 5e-3;
    } else if (name == "sinegordon_paper") {
        c.modes = {201};
        c.time_samples = 201;
        c.horizon = 3.0;
        c.epsilon = 0.1;
        c.steps = 1000;
        c.lr = 1e-2;
        c.ref_dt = 1e-3;
    } else if (name == "burgers2d_paper") {
        c.modes = {201, 201};
        c.time_samples = 101;
        c.horizon = 1.0;
        c.epsilon = 0.1;
        c.nu = 0.01;
        c.steps = 200;
        c.lr = 1e-2;
        c.ref_dt = 1e-3;
    } else if (name == "wave3layer_paper") {
        c.modes = {201, 201};
        c.time_samples = 201;
        c.horizon = 2.0;
        c.epsilon = 1.0;
        c.steps = 2000;
        c.lr = 1e-2;
        c.ref_dt = 1e-3;
    } else {
        std::string msg = "unknown problem preset '" + name + "'; available:";
        for (const auto& p : preset_names()) msg += " " + p;
        throw std::invalid_argument(msg);
    }
    return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::vector<int> parse_modes(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(trim(tok)));
    return out;
}

inline std::string modes_str(const std::vector<int>& m) {
    std::string s;
    for (size_t i = 0; i < m.size(); ++i) s += (i ? "," : "") + std::to_string(m[i]);
    return s;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: boolean expected for " + key + ", got '" + v + "'");
}

} // namespace detail

// Canonical serialization; parse(serialize(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "[run]\n"
       << "problem = " << c.problem << "\n"
       << "seed = " << c.seed << "\n"
       << "out = " << c.out << "\n"
       << "csv_precision = " << c.csv_precision << "\n"
       << "[model]\n"
       << "modes = " << detail::modes_str(c.modes) << "\n"
       << "time_samples = " << c.time_samples << "\n"
       << "horizon = " << c.horizon << "\n"
       << "epsilon = " << c.epsilon << "\n"
       << "hidden_width = " << c.hidden_width << "\n"
       << "dimwise_layers = " << c.dimwise_layers << "\n"
       << "learn_basis = " << (c.learn_basis ? "true" : "false") << "\n"
       << "sigma = " << c.sigma << "\n"
       << "nu = " << c.nu << "\n"
       << "burgers_printed_ic = " << (c.burgers_printed_ic ? "true" : "false") << "\n"
       << "extension = " << c.extension << "\n"
       << "[train]\n"
       << "steps = " << c.steps << "\n"
       << "lr = " << c.lr << "\n"
       << "metric_every = " << c.metric_every << "\n"
       << "collocation = " << c.collocation << "\n"
       << "[reference]\n"
       << "dt = " << c.ref_dt << "\n"
       << "[evaluate]\n"
       << "snapshots = " << c.snapshots << "\n"
       << "extrapolation_factor = " << c.extrapolation_factor << "\n";
    return os.str();
}

inline RunConfig parse_config_text(const std::string& text) {
    // first pass: collect (section, key, value) triples
    std::vector<std::array<std::string, 3>> entries;
    std::string section;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        entries.push_back({section, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1))});
    }
    // the preset seeds the defaults; everything else overrides
    std::string problem;
    for (const auto& e : entries)
        if (e[0] == "run" && e[1] == "problem") problem = e[2];
    if (problem.empty()) throw std::invalid_argument("config: missing run.problem");
    RunConfig c = preset_config(problem);
    for (const auto& [sec, key, val] : entries) {
        const std::string id = sec + "." + key;
        if (id == "run.problem") continue;
        else if (id == "run.seed") c.seed = std::stoull(val);
        else if (id == "run.out") c.out = val;
        else if (id == "run.csv_precision") c.csv_precision = std::stoi(val);
        else if (id == "model.modes") c.modes = detail::parse_modes(val);
        else if (id == "model.time_samples") c.time_samples = std::stoi(val);
        else if (id == "model.horizon") c.horizon = std::stod(val);
        else if (id == "model.epsilon") c.epsilon = std::stod(val);
        else if (id == "model.hidden_width") c.hidden_width = std::stoi(val);
        else if (id == "model.dimwise_layers") c.dimwise_layers = std::stoi(val);
        else if (id == "model.learn_basis") c.learn_basis = detail::parse_bool(val, id);
        else if (id == "model.sigma") c.sigma = std::stod(val);
        else if (id == "model.nu") c.nu = std::stod(val);
        else if (id == "model.burgers_printed_ic") c.burgers_printed_ic = detail::parse_bool(val, id);
        else if (id == "model.extension") c.extension = std::stod(val);
        else if (id == "train.steps") c.steps = std::stoi(val);
        else if (id == "train.lr") c.lr = std::stod(val);
        else if (id == "train.metric_every") c.metric_every = std::stoi(val);
        else if (id == "train.collocation") c.collocation = val;
        else if (id == "reference.dt") c.ref_dt = std::stod(val);
        else if (id == "evaluate.snapshots") c.snapshots = std::stoi(val);
        else if (id == "evaluate.extrapolation_factor") c.extrapolation_factor = std::stod(val);
        else throw std::invalid_argument("config: unknown key '" + id + "'");
    }
    return c;
}

inline void validate_config(const RunConfig& c) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0)) throw std::invalid_argument(std::string("config: ") + what + " must be positive");
    };
    for (int m : c.modes) positive(m, "modes");
    positive(c.time_samples, "time_samples");
    positive(c.horizon, "horizon");
    if (c.epsilon < 0) throw std::invalid_argument("config: epsilon must be >= 0");
    positive(c.hidden_width, "hidden_width");
    positive(c.dimwise_layers, "dimwise_layers");
    positive(c.sigma, "sigma");
    positive(c.nu, "nu");
    positive(c.extension, "extension");
    if (c.steps < 0) throw std::invalid_argument("config: steps must be >= 0");
    positive(c.lr, "lr");
    positive(c.metric_every, "metric_every");
    positive(c.ref_dt, "reference.dt");
    positive(c.snapshots, "snapshots");
    positive(c.extrapolation_factor, "extrapolation_factor");
    positive(c.csv_precision, "csv_precision");
    if (c.collocation != "full" && c.collocation.rfind("subsample:", 0) != 0)
        throw std::invalid_argument("config: collocation must be 'full' or 'subsample:<count>'");
}

inline std::uint64_t config_hash(const RunConfig& c) {
    const std::string s = serialize_config(c);
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// From config to model pieces
// ---------------------------------------------------------------------------

inline std::string base_problem(const std::string& preset) {
    const std::string suffix = "_paper";
    if (preset.size() > suffix.size() &&
        preset.compare(preset.size() - suffix.size(), suffix.size(), suffix) == 0)
        return preset.substr(0, preset.size() - suffix.size());
    return preset;
}

inline ProblemSpec make_problem(const RunConfig& c) {
    const std::string base = base_problem(c.problem);
    ProblemSpec s;
    if (base == "sinegordon") {
        s = make_sine_gordon(-4.0, 4.0, c.sigma, c.horizon);
    } else if (base == "burgers2d") {
        s = make_burgers(0.0, 4.0, c.nu, c.horizon, c.burgers_printed_ic);
    } else if (base == "wave3layer") {
        s = make_wave({-2.0, -2.0}, {2.0, 2.0}, c.sigma, VelocityField{}, c.horizon, c.extension);
    } else {
        throw std::invalid_argument("make_problem: unknown problem '" + c.problem + "'");
    }
    s.epsilon = c.epsilon;
    return s;
}

inline ModelConfig make_model_config(const RunConfig& c) {
    ModelConfig mc;
    mc.modes = c.modes;
    mc.time_samples = c.time_samples;
    mc.T = c.horizon;
    mc.epsilon = c.epsilon;
    mc.hidden_width = c.hidden_width;
    mc.dimwise_layers = c.dimwise_layers;
    mc.learn_basis = c.learn_basis;
    mc.seed = c.seed;
    return mc;
}

// Collocation strategy for the trainer; subsampling draws a fixed random
// subset of grid points (deterministic in the run seed).
inline Collocation make_collocation(const RunConfig& c, const SpectralBasis& basis) {
    Collocation out;
    if (c.collocation == "full") return out;
    const auto count = std::stoll(c.collocation.substr(std::string("subsample:").size()));
    const std::int64_t total = basis.total_modes();
    if (count <= 0 || count > total)
        throw std::invalid_argument("config: subsample count must be in [1, grid size]");
    std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::int64_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    for (std::int64_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::int64_t> pick(i, total - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    out.flat_indices.assign(all.begin(), all.begin() + count);
    std::sort(out.flat_indices.begin(), out.flat_indices.end());
    return out;
}

} // namespace neusa
