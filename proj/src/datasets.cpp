#include "mpe/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/core.h>
#include <json.hpp>

#include "mpe/gates.hpp"

namespace mpe {

using nlohmann::json;

void ClusterSpec::validate() const {
  check_width(n);
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("cluster weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument(fmt::format("cluster weights sum to {}, not 1", total));
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be finite and >= 0");
}

StateVector cluster_center(int n, int cluster) {
  switch (cluster) {
    case 0:
      return basis_state(n, 0);
    case 1:
      return basis_state(n, (std::uint64_t{1} << n) - 1);
    case 2:
      return ghz_state(n);
    default:
      throw std::out_of_range(fmt::format("cluster index {} outside 0..2", cluster));
  }
}

StateVector multi_cluster_sample(const ClusterSpec& spec, Rng& rng, int& cluster) {
  spec.validate();
  const double u = rng.uniform();
  cluster = u < spec.weights[0] ? 0 : (u < spec.weights[0] + spec.weights[1] ? 1 : 2);
  Circuit noise(spec.n);
  // Always draw the angles so the stream does not depend on sigma.
  for (int q = 0; q < spec.n; ++q) {
    const double a = spec.sigma * rng.normal();
    const double b = spec.sigma * rng.normal();
    const double c = spec.sigma * rng.normal();
    noise.add(gate::RX{q, a}).add(gate::RY{q, b}).add(gate::RZ{q, c});
  }
  if (spec.sigma == 0.0) return cluster_center(spec.n, cluster);
  return run_circuit(cluster_center(spec.n, cluster), noise);
}

StateVector multi_cluster_sample(const ClusterSpec& spec, Rng& rng) {
  int cluster = 0;
  return multi_cluster_sample(spec, rng, cluster);
}

std::vector<StateVector> multi_cluster_samples(const ClusterSpec& spec, std::size_t count, Rng& rng) {
  std::vector<StateVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(multi_cluster_sample(spec, rng));
  return out;
}

int atom_type_index(std::string_view symbol) {
  if (symbol == "C") return 0;
  if (symbol == "N") return 1;
  if (symbol == "O") return 2;
  if (symbol == "F") return 3;
  throw std::invalid_argument(fmt::format("unknown heavy-atom symbol '{}'", symbol));
}

std::string atom_type_symbol(int index) {
  static constexpr const char* kSymbols[] = {"C", "N", "O", "F"};
  if (index < 0 || index >= kAtomTypes) throw std::out_of_range(fmt::format("atom type index {}", index));
  return kSymbols[index];
}

std::vector<Vec3> center_and_rotate(const std::vector<Vec3>& coords) {
  if (coords.empty()) throw std::invalid_argument("center_and_rotate needs at least one point");
  Vec3 c{0.0, 0.0, 0.0};
  for (const auto& p : coords)
    for (int a = 0; a < 3; ++a) c[a] += p[a];
  for (auto& x : c) x /= static_cast<double>(coords.size());

  std::vector<Vec3> out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (int a = 0; a < 3; ++a) out[i][a] = coords[i][a] - c[a];

  const Vec3 f = out[0];
  const double r = std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
  if (r < 1e-12) return out;
  const Vec3 u{f[0] / r, f[1] / r, f[2] / r};

  // Rotation taking u to e_z. Axis u x e_z = (u_y, -u_x, 0), cos = u_z.
  std::array<std::array<double, 3>, 3> R{};
  const double cosv = u[2];
  const Vec3 axis_raw{u[1], -u[0], 0.0};
  const double sinv = std::sqrt(axis_raw[0] * axis_raw[0] + axis_raw[1] * axis_raw[1]);
  if (sinv < 1e-12) {
    if (cosv > 0.0) return out;
    // Antiparallel: pi about x.
    R = {{{1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {0.0, 0.0, -1.0}}};
  } else {
    const Vec3 k{axis_raw[0] / sinv, axis_raw[1] / sinv, 0.0};
    const std::array<std::array<double, 3>, 3> K{{{0.0, -k[2], k[1]}, {k[2], 0.0, -k[0]}, {-k[1], k[0], 0.0}}};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double kk = 0.0;
        for (int l = 0; l < 3; ++l) kk += K[i][l] * K[l][j];
        R[i][j] = (i == j ? 1.0 : 0.0) + sinv * K[i][j] + (1.0 - cosv) * kk;
      }
  }
  for (auto& p : out) {
    const Vec3 q = p;
    for (int i = 0; i < 3; ++i) p[i] = R[i][0] * q[0] + R[i][1] * q[1] + R[i][2] * q[2];
  }
  out[0] = {0.0, 0.0, r};  // exact by construction; drop rounding
  return out;
}

MoleculeRecord center_and_rotate(const MoleculeRecord& record) {
  std::vector<Vec3> xyz;
  xyz.reserve(record.atoms.size());
  for (const auto& a : record.atoms) xyz.push_back(a.xyz);
  const auto aligned = center_and_rotate(xyz);
  MoleculeRecord out = record;
  for (std::size_t i = 0; i < aligned.size(); ++i) out.atoms[i].xyz = aligned[i];
  return out;
}

DatasetStats compute_stats(const std::vector<MoleculeRecord>& records) {
  if (records.empty()) throw std::invalid_argument("stats need at least one record");
  Vec3 lo{INFINITY, INFINITY, INFINITY};
  Vec3 hi{-INFINITY, -INFINITY, -INFINITY};
  for (const auto& r : records)
    for (const auto& a : r.atoms)
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], a.xyz[k]);
        hi[k] = std::max(hi[k], a.xyz[k]);
      }
  if (!std::isfinite(lo[0])) throw std::invalid_argument("stats need at least one atom");
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s = std::max(s, hi[k] - lo[k]);
  if (!(s > 0.0)) throw std::invalid_argument("dataset has zero spatial extent");
  return {lo, s, records.size()};
}

std::vector<Vec3> normalize_coords(const MoleculeRecord& record, const DatasetStats& stats) {
  if (!(stats.s > 0.0)) throw std::invalid_argument("stats side length must be > 0");
  std::vector<Vec3> out;
  out.reserve(record.atoms.size());
  for (std::size_t i = 0; i < record.atoms.size(); ++i) {
    Vec3 v{};
    for (int k = 0; k < 3; ++k) {
      double x = (record.atoms[i].xyz[k] - stats.v_min[k]) / stats.s;
      if (x < -1e-12 || x > 1.0 + 1e-12)
        throw std::invalid_argument(fmt::format("record '{}' atom {} axis {}: normalized coordinate {} outside [0, 1]",
                                                record.id, i, k, x));
      v[k] = std::clamp(x, 0.0, 1.0);
    }
    out.push_back(v);
  }
  return out;
}

StateVector qm9_encode(const MoleculeRecord& record, const DatasetStats& stats) {
  const std::size_t m = record.atoms.size();
  if (m < 1 || m > static_cast<std::size_t>(kMaxAtoms))
    throw std::invalid_argument(fmt::format("record '{}' has {} atoms, need 1..{}", record.id, m, kMaxAtoms));
  const auto coords = normalize_coords(record, stats);
  std::vector<Complex> amps(std::size_t{1} << kEncodingQubits, Complex{0.0, 0.0});
  const double scale = 1.0 / (2.0 * std::sqrt(static_cast<double>(m)));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& [x, y, z] = coords[i];
    const std::size_t base = kBlockLength * i;
    amps[base + 0] = x * scale;
    amps[base + 1] = y * scale;
    amps[base + 2] = z * scale;
    amps[base + 3 + atom_type_index(record.atoms[i].symbol)] = scale;
    amps[base + 7] = std::sqrt(3.0 - x * x - y * y - z * z) * scale;
  }
  return StateVector::from_amplitudes(std::move(amps), 1e-10);
}

DecodedMolecule qm9_decode(const StateVector& state, const DatasetStats& stats) {
  if (state.num_qubits() != kEncodingQubits)
    throw std::invalid_argument(fmt::format("molecule states have {} qubits, got {}", kEncodingQubits, state.num_qubits()));
  const auto amps = state.amplitudes();
  const std::size_t blocks = amps.size() / kBlockLength;
  std::size_t m = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    double n2 = 0.0;
    for (int k = 0; k < kBlockLength; ++k) n2 += std::norm(amps[kBlockLength * b + k]);
    if (n2 > 1e-12) {
      if (m != b) throw std::invalid_argument(fmt::format("block {} is occupied after an empty block", b));
      ++m;
    }
  }
  if (m == 0) throw std::invalid_argument("no occupied atom block");
  if (m > static_cast<std::size_t>(kMaxAtoms)) throw std::invalid_argument(fmt::format("{} occupied blocks", m));

  const double unscale = 2.0 * std::sqrt(static_cast<double>(m));
  DecodedMolecule out;
  out.record.id = "decoded";
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t base = kBlockLength * i;
    int type = -1;
    for (int t = 0; t < kAtomTypes; ++t) {
      if (std::abs(amps[base + 3 + t]) > 1e-6) {
        if (type >= 0) throw std::invalid_argument(fmt::format("block {} has more than one type slot set", i));
        type = t;
      }
    }
    if (type < 0) throw std::invalid_argument(fmt::format("block {} has no type slot set", i));
    Vec3 v{amps[base].real() * unscale, amps[base + 1].real() * unscale, amps[base + 2].real() * unscale};
    const auto sym = atom_type_symbol(type);
    out.symbols.push_back(sym);
    out.normalized.push_back(v);
    Vec3 frame{};
    for (int k = 0; k < 3; ++k) frame[k] = stats.v_min[k] + stats.s * v[k];
    out.record.atoms.push_back({sym, frame});
  }
  return out;
}

namespace {

MoleculeRecord record_from_json(const json& j, std::size_t line, const LoadOptions& options) {
  auto fail = [&](const std::string& what) {
    return std::runtime_error(fmt::format("line {}: {}", line, what));
  };
  if (!j.is_object()) throw fail("expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw fail("missing string field 'id'");
  if (!j.contains("atoms") || !j["atoms"].is_array()) throw fail("missing array field 'atoms'");
  MoleculeRecord r;
  r.id = j["id"].get<std::string>();
  if (j.contains("source")) {
    if (!j["source"].is_string()) throw fail("'source' must be a string");
    r.source = j["source"].get<std::string>();
  }
  for (const auto& a : j["atoms"]) {
    if (!a.is_object() || !a.contains("symbol") || !a["symbol"].is_string() || !a.contains("xyz") ||
        !a["xyz"].is_array() || a["xyz"].size() != 3)
      throw fail("atom entries need 'symbol' and a 3-element 'xyz'");
    Atom atom;
    atom.symbol = a["symbol"].get<std::string>();
    try {
      atom_type_index(atom.symbol);
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
    for (int k = 0; k < 3; ++k) {
      if (!a["xyz"][k].is_number()) throw fail("coordinates must be numbers");
      atom.xyz[k] = a["xyz"][k].get<double>();
      if (!std::isfinite(atom.xyz[k])) throw fail("coordinates must be finite");
    }
    r.atoms.push_back(atom);
  }
  const auto m = r.atoms.size();
  if (m < 1 || m > static_cast<std::size_t>(kMaxAtoms))
    throw fail(fmt::format("record '{}' has {} heavy atoms, need 1..{}", r.id, m, kMaxAtoms));
  if (options.strict && m != 7)
    throw fail(fmt::format("record '{}' has {} heavy atoms, strict mode needs exactly 7", r.id, m));
  return r;
}

}  // namespace

std::vector<MoleculeRecord> load_prep_output(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::vector<MoleculeRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(fmt::format("line {}: invalid JSON ({})", line, e.what()));
    }
    out.push_back(record_from_json(j, line, options));
  }
  return out;
}

void write_prep_output(const std::filesystem::path& path, const std::vector<MoleculeRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  for (const auto& r : records) {
    json atoms = json::array();
    for (const auto& a : r.atoms) atoms.push_back({{"symbol", a.symbol}, {"xyz", {a.xyz[0], a.xyz[1], a.xyz[2]}}});
    out << json{{"id", r.id}, {"atoms", atoms}, {"source", r.source}}.dump() << '\n';
  }
}

DatasetStats load_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  const json j = json::parse(in);
  DatasetStats s;
  const auto v = j.at("v_min");
  if (!v.is_array() || v.size() != 3) throw std::runtime_error("stats: 'v_min' must have 3 entries");
  for (int k = 0; k < 3; ++k) s.v_min[k] = v[k].get<double>();
  s.s = j.at("s").get<double>();
  s.n_records = j.value("n_records", std::size_t{0});
  if (!(s.s > 0.0)) throw std::runtime_error("stats: 's' must be > 0");
  return s;
}

void write_stats(const std::filesystem::path& path, const DatasetStats& stats) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << json{{"v_min", {stats.v_min[0], stats.v_min[1], stats.v_min[2]}}, {"s", stats.s},
              {"n_records", stats.n_records}}
             .dump(2)
      << '\n';
}

EncodedDataset encode_dataset(const std::vector<MoleculeRecord>& records) {
  EncodedDataset d;
  d.aligned.reserve(records.size());
  for (const auto& r : records) d.aligned.push_back(center_and_rotate(r));
  d.stats = compute_stats(d.aligned);
  d.states.reserve(records.size());
  for (const auto& r : d.aligned) d.states.push_back(qm9_encode(r, d.stats));
  return d;
}

}  // namespace mpe
