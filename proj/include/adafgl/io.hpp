#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "adafgl/graph.hpp"
#include "adafgl/partition.hpp"

namespace adafgl::io {

// Graph directory layout:
//   edges.tsv     one "u<TAB>v" per line, '#' starts a comment
//   features.bin  u64 n, u64 f, then n*f little-endian float64, row-major
//   labels.txt    one integer class per line
//   masks.txt     optional, one of train|val|test|none per line

/// Loads and validates a graph directory. Self-loops and duplicate edges are
/// dropped and reported through a warning. `num_classes` overrides the count
/// inferred from the labels.
Graph load_graph(const std::filesystem::path& dir, std::optional<int> num_classes = std::nullopt);
void save_graph(const Graph& g, const std::filesystem::path& dir);

/// Per-class stratified split. Each class gets round(ratio * n_c) train and
/// validation nodes (at least one train node) and the rest go to test. Classes
/// with fewer than three nodes get one train node and alternate the rest
/// between validation and test, with a warning.
Graph make_masks(const Graph& g, std::array<double, 3> ratios, std::uint64_t seed);

/// Task directory: manifest.json plus one graph directory per client
/// (client_<id>/).
void save_task(const FederatedTask& task, const std::filesystem::path& dir);
FederatedTask load_task(const std::filesystem::path& dir);

/// Builds a graph from the LINQS citation dump: `content` rows are
/// "<id> <binary features...> <label name>", `cites` rows are "<id> <id>".
/// Class indices follow the sorted label names; citations naming unknown ids
/// are skipped with a warning.
Graph convert_linqs(const std::filesystem::path& content, const std::filesystem::path& cites);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

} // namespace adafgl::io
