#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpe/covering.hpp"
#include "mpe/incremental.hpp"
#include "mpe/state.hpp"
#include "mpe/universality.hpp"

namespace mpe {

using Json = nlohmann::json;

/// {"num_qubits": n, "amplitudes": [[re, im], ...]}
Json state_to_json(const StateVector& s);
StateVector state_from_json(const Json& j);

/// One state per line.
void write_states_jsonl(const std::filesystem::path& path, const std::vector<StateVector>& states);
std::vector<StateVector> read_states_jsonl(const std::filesystem::path& path);

Json delta_net_to_json(const DeltaNet& net);
Json certificate_to_json(const CertificateReport& r);

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

Json metrics_to_json(const EnsembleMetrics& m);
Json report_to_json(const TrainReport& r);

/// Doubles go through the shortest round-trip representation, so
/// checkpoint_from_json(checkpoint_to_json(c)) restores every bit.
Json checkpoint_to_json(const TrainCheckpoint& c);
TrainCheckpoint checkpoint_from_json(const Json& j);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace mpe
