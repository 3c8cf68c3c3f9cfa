#pragma once
// Structured-text configuration: parsing, validation, dotted-key overrides
// and the resolved-config echo that makes every run replayable.

#include <json.hpp>
#include <string>
#include <vector>

#include "dts/harness.hpp"

namespace dts {

using Json = nlohmann::json;

struct StudyConfig {
    Json resolved;  // fully-resolved config, echoed next to every artifact
    Instance instance;
    ContextProcess process;
    EpisodeConfig episode;
    TruthSampler truth_sampler;
    long n_reps = 1;
    int parallelism = 1;
    std::uint64_t seed = 0;
    std::vector<double> sweep_costs;  // nonempty for cost sweeps
};

// Applies key=value to a dotted path in the JSON document, parsing the value
// as JSON when possible and as a string otherwise.
void apply_override(Json& doc, const std::string& key_value);

// Parses and validates a config document. seed/reps/parallelism read from
// the document may be overridden by the caller before validation.
StudyConfig parse_config(Json doc);

StudyConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

// Derived quantities for validate-config: x_pop, second-moment spectrum when
// the context process is i.i.d., and the concentration factor at horizon T.
Json describe_config(const StudyConfig& config, long T);

Json summary_to_json(const RunSummary& summary, int k);
Json allocation_to_json(const AllocationSolution& sol);
Json certificate_to_json(const EquilibriumCertificate& cert);
Json cost_sweep_to_json(const std::vector<CostSweepRow>& rows);

}  // namespace dts
