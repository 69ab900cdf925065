#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mpe/rng.hpp"
#include "mpe/state.hpp"

namespace mpe {

/// Three-cluster target: |0...0>, |1...1> and GHZ, each draw perturbed by
/// independent single-qubit rotations.
struct ClusterSpec {
  int n = 4;
  std::array<double, 3> weights{0.4, 0.4, 0.2};
  double sigma = 0.05;

  void validate() const;
};

StateVector cluster_center(int n, int cluster);

/// Pick a cluster by weight, then per qubit apply RX(a), RY(b), RZ(c) in that
/// order with a, b, c ~ N(0, sigma^2).
StateVector multi_cluster_sample(const ClusterSpec& spec, Rng& rng);
/// Same, also reporting which cluster was drawn.
StateVector multi_cluster_sample(const ClusterSpec& spec, Rng& rng, int& cluster);

std::vector<StateVector> multi_cluster_samples(const ClusterSpec& spec, std::size_t count, Rng& rng);

using Vec3 = std::array<double, 3>;

struct Atom {
  std::string symbol;  // C, N, O or F
  Vec3 xyz{};
  bool operator==(const Atom&) const = default;
};

struct MoleculeRecord {
  std::string id;
  std::vector<Atom> atoms;
  std::string source;
  bool operator==(const MoleculeRecord&) const = default;
};

inline constexpr int kAtomTypes = 4;
inline constexpr int kMaxAtoms = 9;
inline constexpr int kBlockLength = 8;
inline constexpr int kEncodingQubits = 7;

/// C -> 0, N -> 1, O -> 2, F -> 3. Throws on anything else.
int atom_type_index(std::string_view symbol);
std::string atom_type_symbol(int index);

/// Subtract the centroid, then rotate so the first atom lies on +z.
std::vector<Vec3> center_and_rotate(const std::vector<Vec3>& coords);
MoleculeRecord center_and_rotate(const MoleculeRecord& record);

struct DatasetStats {
  Vec3 v_min{};
  double s = 0.0;
  std::size_t n_records = 0;
};

/// Global per-axis minimum and widest extent over already aligned records.
/// Throws if the extent is zero.
DatasetStats compute_stats(const std::vector<MoleculeRecord>& records);

/// (v - v_min) / s per atom. Throws if any coordinate leaves [0, 1] by more
/// than 1e-12 (values inside that slack are clamped).
std::vector<Vec3> normalize_coords(const MoleculeRecord& record, const DatasetStats& stats);

/// 128 amplitudes: atom i fills [8i, 8i + 8) with (x, y, z, one-hot type,
/// sqrt(3 - x^2 - y^2 - z^2)), everything times 1 / (2 sqrt m).
StateVector qm9_encode(const MoleculeRecord& record, const DatasetStats& stats);

struct DecodedMolecule {
  std::vector<std::string> symbols;
  std::vector<Vec3> normalized;  // in [0, 1]
  MoleculeRecord record;         // aligned-frame coordinates, v_min + s * normalized
};

/// Inverse of qm9_encode. A block is occupied when its squared norm exceeds
/// 1e-12; an occupied block must have exactly one type slot above 1e-6.
DecodedMolecule qm9_decode(const StateVector& state, const DatasetStats& stats);

struct LoadOptions {
  bool strict = true;  // require exactly 7 heavy atoms
};

/// Reads the prep JSONL. Errors carry the 1-based line number. Blank lines
/// are skipped. More than 9 atoms is always rejected.
std::vector<MoleculeRecord> load_prep_output(const std::filesystem::path& path, const LoadOptions& options = {});
void write_prep_output(const std::filesystem::path& path, const std::vector<MoleculeRecord>& records);

DatasetStats load_stats(const std::filesystem::path& path);
void write_stats(const std::filesystem::path& path, const DatasetStats& stats);

/// Aligns every record, computes stats over the aligned set and encodes.
struct EncodedDataset {
  std::vector<MoleculeRecord> aligned;
  DatasetStats stats;
  std::vector<StateVector> states;
};
EncodedDataset encode_dataset(const std::vector<MoleculeRecord>& records);

}  // namespace mpe
