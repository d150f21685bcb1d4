// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stensor/layout.hpp"
#include "stensor/matrix.hpp"

namespace stensor {

enum class GraphLevel { global, local };

/// Column-conflict structure: (i, j) is an edge iff some row has nonzeros in
/// both columns i and j.
struct ConflictGraph {
    std::size_t node_count = 0;
    GraphLevel level = GraphLevel::local;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted
    std::vector<std::uint8_t> adj;                           // n x n matrix

    bool has_edge(std::size_t i, std::size_t j) const { return adj[i * node_count + j] != 0; }
};

/// Element-level conflict graph of a matrix (Def.: columns conflict when they
/// share a structurally nonzero row).
ConflictGraph build_conflict_graph(const Matrix& a, GraphLevel level = GraphLevel::local);

/// Block-level conflict graph: blocks of block_cols consecutive columns are
/// treated as scalars (nonzero iff any element nonzero).
ConflictGraph build_conflict_graph_blocks(const Matrix& a, std::size_t block_rows,
                                          std::size_t block_cols);

/// Structural-mask variant used by the pipeline (star-induced numeric zeros
/// stay conservative nonzeros).
ConflictGraph build_conflict_graph_structural(const MorphedLayout& layout);

/// Adjacency-list debug dump (one "i: j k ..." line per node).
std::string dump_conflict_graph(const ConflictGraph& g);

/// Pairing of columns; right partner >= node_count denotes a fresh zero
/// column (ids node_count .. node_count + zero_columns - 1).
struct Matching {
    struct Pair {
        std::size_t left, right;
    };
    std::vector<Pair> pairs;        // ascending by left index
    std::size_t node_count = 0;
    std::size_t zero_columns = 0;   // p
    std::uint64_t visits = 0;       // node visits in the structural phase
    bool refined = false;           // exact small-graph refinement replaced the literal result
};

/// Hierarchical two-level matching on a self-similar staircase descriptor:
/// block_count blocks of block_size columns, stencil extent k. Runs the
/// two-level algorithm literally, then cross-checks small graphs (n <= 24)
/// against an exact matcher and keeps the smaller padding.
Matching hierarchical_match(std::size_t block_count, std::size_t block_size, int k);

/// Maximum matching on the complement of the conflict graph (Blossom);
/// unmatched nodes are paired with fresh zero columns.
Matching blossom_match(const ConflictGraph& graph);

/// Exhaustive minimum zero-column count (test oracle; n <= 12).
std::size_t min_padding_bruteforce(const ConflictGraph& graph);

/// The conflict graph of the matrix a descriptor (block_count, block_size, k)
/// denotes (band truncation applied when block_count < k).
ConflictGraph descriptor_conflict_graph(std::size_t block_count, std::size_t block_size, int k);
Matrix descriptor_matrix(std::size_t block_count, std::size_t block_size, int k);

struct Permutation {
    std::vector<std::size_t> order;  // original index -> new position
    std::size_t size() const { return order.size(); }
};

/// Pair t occupies positions (2t, 2t+1); pairs ordered ascending by left.
Permutation build_permutation(const Matching& matching, std::size_t k_prime, std::size_t p);

/// Permutation Invariant Transformation: appends the matching's zero columns
/// to A' (ZERO rows to the b_map), then permutes A'-columns and B'-rows by
/// the same bijection. The product is unchanged.
MorphedLayout apply_pit(const MorphedLayout& layout, const Permutation& perm);

/// True iff every row's every 4-group has <= 2 nonzeros (0:4 and 1:4
/// sub-patterns are processable). Column count must be divisible by 4.
bool check_24(const Matrix& a);

/// Full conversion of a morphed layout into a 2:4-compatible layout.
struct Conversion {
    MorphedLayout converted;  // post-PIT, zero-padded to a multiple of 4 columns
    Matching matching;
    Permutation perm;
    std::size_t p = 0;           // matching zero columns
    std::size_t align_cols = 0;  // extra zero columns for 4-alignment
    bool used_blossom = false;   // staircase verification failed -> fallback
};
Conversion convert_layout(const MorphedLayout& layout);

}  // namespace stensor
