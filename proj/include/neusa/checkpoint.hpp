// Parameter checkpoints: a plain-text header (shapes, seed, config hash)
// followed by one hex-float row per tensor, so round trips are bit-exact.

#pragma once

#include "neusa/model.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace neusa {

struct CheckpointMeta {
    std::string problem;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

inline void save_checkpoint(const std::string& path, NeusaModel& model, const CheckpointMeta& meta) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    auto params = model.named_parameters();
    std::fprintf(f, "neusa-checkpoint v1\n");
    std::fprintf(f, "problem %s\n", meta.problem.c_str());
    std::fprintf(f, "seed %" PRIu64 "\n", meta.seed);
    std::fprintf(f, "config_hash %016" PRIx64 "\n", meta.config_hash);
    std::fprintf(f, "params %zu\n", params.size());
    for (auto& [name, t] : params) {
        std::fprintf(f, "%s %zu", name.c_str(), t->shape.size());
        for (int d : t->shape) std::fprintf(f, " %d", d);
        std::fprintf(f, "\n");
        const auto& v = t->vals();
        for (std::int64_t i = 0; i < t->numel(); ++i)
            std::fprintf(f, i + 1 < t->numel() ? "%a " : "%a\n", v[i]);
        if (t->numel() == 0) std::fprintf(f, "\n");
    }
    std::fclose(f);
}

inline CheckpointMeta load_checkpoint(const std::string& path, NeusaModel& model) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "neusa-checkpoint" || version != "v1")
        throw std::runtime_error("load_checkpoint: bad header in " + path);
    CheckpointMeta meta;
    std::string key;
    in >> key >> meta.problem;
    in >> key >> meta.seed;
    std::string hash_hex;
    in >> key >> hash_hex;
    meta.config_hash = std::stoull(hash_hex, nullptr, 16);
    size_t count = 0;
    in >> key >> count;
    auto params = model.named_parameters();
    if (count != params.size())
        throw std::runtime_error("load_checkpoint: parameter count mismatch (" +
                                 std::to_string(count) + " vs " + std::to_string(params.size()) + ")");
    for (auto& [name, t] : params) {
        std::string pname;
        size_t rank;
        in >> pname >> rank;
        if (pname != name)
            throw std::runtime_error("load_checkpoint: parameter order mismatch: " + pname + " vs " + name);
        Shape shape(rank);
        for (auto& d : shape) in >> d;
        if (shape != t->shape)
            throw std::runtime_error("load_checkpoint: shape mismatch for " + name +
                                     " (checkpoint " + shape_str(shape) + ", model " +
                                     shape_str(t->shape) + ")");
        std::vector<double> v(shape_numel(shape));
        for (auto& x : v) {
            std::string tok;
            in >> tok;
            x = std::strtod(tok.c_str(), nullptr); // hex floats round-trip exactly
        }
        if (!in) throw std::runtime_error("load_checkpoint: truncated values for " + name);
        *t = Tensor::from(shape, std::move(v));
    }
    return meta;
}

} // namespace neusa
