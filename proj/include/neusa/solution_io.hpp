// On-disk formats for grid solutions and training histories.
//
// CSV: comment header with problem/dims/dt/dx plus config hash and seed, then
// one row per (t, x[, y]) with the channel values at 17 significant digits.
// Binary: a fixed little-endian header followed by raw 64-bit floats, for
// large grids. Both round-trip losslessly.

#pragma once

#include "neusa/reference.hpp"
#include "neusa/training.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace neusa {

// Grid geometry travels with the solution so files are self-describing.
struct SolutionGridMeta {
    std::vector<std::vector<double>> axis_nodes;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

inline void write_solution_csv(const std::string& path, const ReferenceSolution& sol,
                               const SolutionGridMeta& meta, int precision = 17) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_solution_csv: cannot open " + path);
    const int d = static_cast<int>(meta.axis_nodes.size());
    const int channels = sol.fields.empty() ? 0 : sol.fields[0].shape[0];
    std::fprintf(f, "# problem=%s\n", sol.problem.c_str());
    std::fprintf(f, "# dims=%d channels=%d\n", d, channels);
    std::fprintf(f, "# dt=%.17g\n", sol.dt);
    std::fprintf(f, "# dx=");
    for (int i = 0; i < d; ++i) std::fprintf(f, i ? " %.17g" : "%.17g", sol.dx[i]);
    std::fprintf(f, "\n# grid=");
    for (int i = 0; i < d; ++i)
        std::fprintf(f, i ? " %zu" : "%zu", meta.axis_nodes[i].size());
    std::fprintf(f, "\n");
    for (int i = 0; i < d; ++i) {
        std::fprintf(f, "# axis%d=", i);
        for (size_t j = 0; j < meta.axis_nodes[i].size(); ++j)
            std::fprintf(f, j ? " %.17g" : "%.17g", meta.axis_nodes[i][j]);
        std::fprintf(f, "\n");
    }
    std::fprintf(f, "# notes=%s\n", sol.notes.c_str());
    std::fprintf(f, "# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n", meta.config_hash, meta.seed);
    std::fprintf(f, "t,x%s", d > 1 ? ",y" : "");
    for (int c = 0; c < channels; ++c) std::fprintf(f, ",ch%d", c);
    std::fprintf(f, "\n");
    for (size_t ti = 0; ti < sol.times.size(); ++ti) {
        const Tensor& field = sol.fields[ti];
        const std::int64_t per_ch = field.numel() / channels;
        std::vector<int> idx(d, 0);
        for (std::int64_t k = 0; k < per_ch; ++k) {
            std::fprintf(f, "%.*g", precision, sol.times[ti]);
            for (int i = 0; i < d; ++i)
                std::fprintf(f, ",%.*g", precision, meta.axis_nodes[i][idx[i]]);
            for (int c = 0; c < channels; ++c)
                std::fprintf(f, ",%.*g", precision, field[c * per_ch + k]);
            std::fprintf(f, "\n");
            for (int i = d - 1; i >= 0; --i) {
                if (++idx[i] < static_cast<int>(meta.axis_nodes[i].size())) break;
                idx[i] = 0;
            }
        }
    }
    std::fclose(f);
}

inline ReferenceSolution read_solution_csv(const std::string& path, SolutionGridMeta* meta_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_solution_csv: cannot open " + path);
    ReferenceSolution sol;
    SolutionGridMeta meta;
    int d = 0, channels = 0;
    std::vector<size_t> grid;
    std::string line;
    // header comments
    while (in.peek() == '#') {
        std::getline(in, line);
        if (line.rfind("# problem=", 0) == 0) sol.problem = line.substr(10);
        else if (line.rfind("# dims=", 0) == 0) std::sscanf(line.c_str(), "# dims=%d channels=%d", &d, &channels);
        else if (line.rfind("# dt=", 0) == 0) sol.dt = std::strtod(line.c_str() + 5, nullptr);
        else if (line.rfind("# dx=", 0) == 0) {
            std::istringstream ss(line.substr(5));
            double v;
            while (ss >> v) sol.dx.push_back(v);
        } else if (line.rfind("# grid=", 0) == 0) {
            std::istringstream ss(line.substr(7));
            size_t n;
            while (ss >> n) grid.push_back(n);
        } else if (line.rfind("# axis", 0) == 0) {
            const size_t eq = line.find('=');
            const int ax = std::stoi(line.substr(6, eq - 6));
            if (static_cast<size_t>(ax) >= meta.axis_nodes.size()) meta.axis_nodes.resize(ax + 1);
            std::istringstream ss(line.substr(eq + 1));
            double v;
            while (ss >> v) meta.axis_nodes[ax].push_back(v);
        } else if (line.rfind("# notes=", 0) == 0) {
            sol.notes = line.substr(8);
        } else if (line.rfind("# config_hash=", 0) == 0) {
            unsigned long long h = 0, s = 0;
            std::sscanf(line.c_str(), "# config_hash=%llx seed=%llu", &h, &s);
            meta.config_hash = h;
            meta.seed = s;
        }
    }
    std::getline(in, line); // column header
    if (d == 0 || channels == 0 || grid.size() != static_cast<size_t>(d))
        throw std::runtime_error("read_solution_csv: malformed header in " + path);
    std::int64_t per_time = 1;
    for (size_t n : grid) per_time *= static_cast<std::int64_t>(n);
    Shape fshape{channels};
    for (size_t n : grid) fshape.push_back(static_cast<int>(n));

    std::vector<double> cur(static_cast<size_t>(per_time) * channels);
    std::int64_t row_in_time = 0;
    double cur_t = 0.0;
    auto flush = [&]() {
        sol.times.push_back(cur_t);
        // rows carry channels last; fields store channels first
        std::vector<double> field(cur.size());
        for (std::int64_t k = 0; k < per_time; ++k)
            for (int c = 0; c < channels; ++c)
                field[static_cast<size_t>(c) * per_time + k] = cur[static_cast<size_t>(k) * channels + c];
        sol.fields.push_back(Tensor::from(fshape, std::move(field)));
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::strtod(tok.c_str(), nullptr));
        if (static_cast<int>(vals.size()) != 1 + d + channels)
            throw std::runtime_error("read_solution_csv: bad row in " + path);
        if (row_in_time == 0) cur_t = vals[0];
        for (int c = 0; c < channels; ++c)
            cur[static_cast<size_t>(row_in_time) * channels + c] = vals[1 + d + c];
        if (++row_in_time == per_time) {
            flush();
            row_in_time = 0;
        }
    }
    if (row_in_time != 0) throw std::runtime_error("read_solution_csv: truncated file " + path);
    if (meta_out) *meta_out = meta;
    return sol;
}

// ---------------------------------------------------------------------------
// Binary alternative (little-endian doubles, fixed header)
// ---------------------------------------------------------------------------

inline void write_solution_bin(const std::string& path, const ReferenceSolution& sol,
                               const SolutionGridMeta& meta) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_solution_bin: cannot open " + path);
    auto w32 = [&](std::uint32_t v) { std::fwrite(&v, 4, 1, f); };
    auto w64 = [&](std::uint64_t v) { std::fwrite(&v, 8, 1, f); };
    auto wf = [&](double v) { std::fwrite(&v, 8, 1, f); };
    std::fwrite("NEUSABIN", 8, 1, f);
    w32(1); // version
    w64(meta.config_hash);
    w64(meta.seed);
    w32(static_cast<std::uint32_t>(sol.problem.size()));
    std::fwrite(sol.problem.data(), 1, sol.problem.size(), f);
    const std::uint32_t d = static_cast<std::uint32_t>(meta.axis_nodes.size());
    w32(d);
    for (const auto& nodes : meta.axis_nodes) {
        w32(static_cast<std::uint32_t>(nodes.size()));
        for (double x : nodes) wf(x);
    }
    const std::uint32_t channels = sol.fields.empty() ? 0 : sol.fields[0].shape[0];
    w32(channels);
    wf(sol.dt);
    w32(static_cast<std::uint32_t>(sol.times.size()));
    for (double t : sol.times) wf(t);
    for (const auto& field : sol.fields)
        std::fwrite(field.vals().data(), 8, static_cast<size_t>(field.numel()), f);
    std::fclose(f);
}

inline ReferenceSolution read_solution_bin(const std::string& path, SolutionGridMeta* meta_out = nullptr) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("read_solution_bin: cannot open " + path);
    auto fail = [&](const char* what) {
        std::fclose(f);
        throw std::runtime_error(std::string("read_solution_bin: ") + what + " in " + path);
    };
    char magic[8];
    if (std::fread(magic, 8, 1, f) != 1 || std::memcmp(magic, "NEUSABIN", 8) != 0) fail("bad magic");
    auto r32 = [&]() { std::uint32_t v; if (std::fread(&v, 4, 1, f) != 1) fail("truncated"); return v; };
    auto r64 = [&]() { std::uint64_t v; if (std::fread(&v, 8, 1, f) != 1) fail("truncated"); return v; };
    auto rf = [&]() { double v; if (std::fread(&v, 8, 1, f) != 1) fail("truncated"); return v; };
    if (r32() != 1) fail("unsupported version");
    SolutionGridMeta meta;
    ReferenceSolution sol;
    meta.config_hash = r64();
    meta.seed = r64();
    const std::uint32_t name_len = r32();
    sol.problem.resize(name_len);
    if (name_len && std::fread(sol.problem.data(), 1, name_len, f) != name_len) fail("truncated");
    const std::uint32_t d = r32();
    Shape fshape;
    std::int64_t per_time = 1;
    for (std::uint32_t i = 0; i < d; ++i) {
        const std::uint32_t n = r32();
        std::vector<double> nodes(n);
        for (auto& x : nodes) x = rf();
        if (n > 1) sol.dx.push_back(nodes[1] - nodes[0]);
        meta.axis_nodes.push_back(std::move(nodes));
        fshape.push_back(static_cast<int>(n));
        per_time *= n;
    }
    const std::uint32_t channels = r32();
    fshape.insert(fshape.begin(), static_cast<int>(channels));
    sol.dt = rf();
    const std::uint32_t nt = r32();
    sol.times.resize(nt);
    for (auto& t : sol.times) t = rf();
    for (std::uint32_t t = 0; t < nt; ++t) {
        std::vector<double> v(static_cast<size_t>(per_time) * channels);
        if (std::fread(v.data(), 8, v.size(), f) != v.size()) fail("truncated fields");
        sol.fields.push_back(Tensor::from(fshape, std::move(v)));
    }
    std::fclose(f);
    if (meta_out) *meta_out = meta;
    return sol;
}

// step, loss, rMAE, rMSE, wall_seconds per row; metric columns are empty on
// steps where metrics were not evaluated.
inline void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows,
                              std::uint64_t config_hash, std::uint64_t seed) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_history_csv: cannot open " + path);
    std::fprintf(f, "# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n", config_hash, seed);
    std::fprintf(f, "step,loss,rmae,rmse,wall_seconds\n");
    for (const auto& r : rows) {
        std::fprintf(f, "%d,%.17g,", r.step, r.loss);
        if (std::isfinite(r.rmae)) std::fprintf(f, "%.17g", r.rmae);
        std::fprintf(f, ",");
        if (std::isfinite(r.rmse)) std::fprintf(f, "%.17g", r.rmse);
        std::fprintf(f, ",%.6f\n", r.wall_seconds);
    }
    std::fclose(f);
}

} // namespace neusa
