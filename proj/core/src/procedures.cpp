#include "crt/procedures.hpp"

#include <charconv>
#include <vector>

#include "crt/csv_io.hpp"
#include "crt/error.hpp"

namespace crt {

namespace {

std::vector<std::string_view> split_label(std::string_view label) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = label.find('_', start);
    parts.push_back(label.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_label(std::string_view label) {
  throw SchemaError("unrecognized procedure '" + std::string(label) + "'");
}

int parse_prefixed_int(std::string_view part, char prefix, std::string_view label) {
  if (part.size() < 2 || part.front() != prefix) bad_label(label);
  int value = 0;
  const auto* end = part.data() + part.size();
  const auto [ptr, ec] = std::from_chars(part.data() + 1, end, value);
  if (ec != std::errc() || ptr != end) bad_label(label);
  return value;
}

StatisticKind parse_statistic(std::string_view part, std::string_view label) {
  if (part == "sd") return StatisticKind::MeanDiff;
  if (part == "int") return StatisticKind::Interaction;
  bad_label(label);
}

StatisticSpec statistic_spec(StatisticKind kind) {
  if (kind == StatisticKind::Interaction) return RegressionInteraction{};
  return MeanDifference{};
}

}  // namespace

std::string_view kind_name(ProcedureKind kind) {
  switch (kind) {
    case ProcedureKind::Unconditional:
      return "unconditional";
    case ProcedureKind::Conditional:
      return "conditional";
    case ProcedureKind::CemQuantile:
      return "cem_quantile";
    case ProcedureKind::CemSturges:
      return "cem_sturges";
    case ProcedureKind::CemEqualWidth:
      return "cem_auto";
  }
  return "unknown";
}

std::string_view statistic_name(StatisticKind stat) { return stat == StatisticKind::Interaction ? "int" : "sd"; }

std::string ProcedureSpec::label() const {
  switch (kind) {
    case ProcedureKind::Unconditional:
      return "uncond_" + std::string(statistic_name(statistic));
    case ProcedureKind::Conditional: {
      std::string s = "cond_" + std::string(statistic_name(statistic)) + "_T" + std::to_string(tiers) + "_pa" +
                      csv::format_double(acceptance);
      if (bounds == BoundsProcedure::Bin) s += "_bin";
      return s;
    }
    case ProcedureKind::CemQuantile:
      return "cem_quantile_G" + std::to_string(groups);
    case ProcedureKind::CemSturges:
      return "cem_sturges";
    case ProcedureKind::CemEqualWidth:
      return "cem_auto_G" + std::to_string(groups);
  }
  return "unknown";
}

ProcedureSpec ProcedureSpec::parse(std::string_view label) {
  const auto parts = split_label(label);
  ProcedureSpec spec;
  if (parts[0] == "uncond" && parts.size() == 2) {
    spec.kind = ProcedureKind::Unconditional;
    spec.statistic = parse_statistic(parts[1], label);
  } else if (parts[0] == "cond" && (parts.size() == 4 || parts.size() == 5)) {
    spec.kind = ProcedureKind::Conditional;
    spec.statistic = parse_statistic(parts[1], label);
    spec.tiers = parse_prefixed_int(parts[2], 'T', label);
    if (parts[3].size() < 3 || parts[3].substr(0, 2) != "pa") bad_label(label);
    try {
      spec.acceptance = csv::parse_double(std::string(parts[3].substr(2)), "procedure " + std::string(label));
    } catch (const SchemaError&) {
      bad_label(label);
    }
    if (parts.size() == 5) {
      if (parts[4] != "bin") bad_label(label);
      spec.bounds = BoundsProcedure::Bin;
    }
  } else if (parts[0] == "cem" && parts.size() == 3 && parts[1] == "quantile") {
    spec.kind = ProcedureKind::CemQuantile;
    spec.groups = parse_prefixed_int(parts[2], 'G', label);
  } else if (parts[0] == "cem" && parts.size() == 3 && parts[1] == "auto") {
    spec.kind = ProcedureKind::CemEqualWidth;
    spec.groups = parse_prefixed_int(parts[2], 'G', label);
  } else if (parts[0] == "cem" && parts.size() == 2 && parts[1] == "sturges") {
    spec.kind = ProcedureKind::CemSturges;
  } else {
    bad_label(label);
  }
  return spec;
}

void ProcedureSpec::validate(int covariates) const {
  if (kind == ProcedureKind::Conditional) {
    if (tiers < 1 || tiers > covariates)
      throw InvalidDesignError("tier count must lie in [1, " + std::to_string(covariates) + "]");
    if (!(acceptance > 0.0 && acceptance <= 1.0)) throw InvalidDesignError("acceptance probability must lie in (0, 1]");
    if (reference_draws < 2) throw InvalidDesignError("at least 2 reference draws are needed");
  }
  const bool cem = kind == ProcedureKind::CemQuantile || kind == ProcedureKind::CemSturges ||
                   kind == ProcedureKind::CemEqualWidth;
  if (cem && kind != ProcedureKind::CemSturges && groups < 2) throw InvalidDesignError("CEM needs at least 2 groups");
  if (cem && statistic != StatisticKind::MeanDiff)
    throw InvalidDesignError("CEM procedures use the mean-difference statistic");
}

PreparedProcedure::PreparedProcedure(ProcedureSpec spec, const Matrix& x, double condition_cap)
    : spec_(spec), x_(x), condition_cap_(condition_cap) {
  spec_.validate(static_cast<int>(x.cols()));
  switch (spec_.kind) {
    case ProcedureKind::Unconditional:
      break;
    case ProcedureKind::Conditional:
      balance_.emplace(x_, TierSpec::contiguous(static_cast<int>(x.cols()), spec_.tiers), condition_cap_);
      break;
    case ProcedureKind::CemQuantile:
      strata_ = coarsen(x_, CoarseningSpec::quantile(spec_.groups, static_cast<int>(x.cols())));
      break;
    case ProcedureKind::CemSturges:
      strata_ = coarsen(x_, CoarseningSpec::sturges(x_));
      break;
    case ProcedureKind::CemEqualWidth:
      strata_ = coarsen(x_, CoarseningSpec::equal_width(spec_.groups, x_));
      break;
  }
}

ProcedureRun PreparedProcedure::run(const Assignment& w_obs, const Vector& y_obs, const TestOptions& options,
                                    std::uint64_t seed) const {
  ProcedureRun out;
  TestOptions opts = options;
  opts.condition_cap = condition_cap_;
  TestResult result;

  if (strata_) {
    std::vector<int> kept;
    try {
      kept = cem_prune(*strata_, w_obs);
    } catch (const AllPrunedError&) {
      out.degenerate = true;
      return out;
    }
    const ExperimentData full(x_, w_obs, y_obs);
    const ExperimentData data = full.subset(kept);
    const WithinStrata sampler{strata_->subset(kept)};
    result = randomization_pvalue(data, MeanDifference{}, sampler, opts, seed);
    out.retained = static_cast<int>(kept.size());
  } else {
    const ExperimentData data(x_, w_obs, y_obs);
    if (spec_.kind == ProcedureKind::Conditional) {
      BoundsConfig cfg;
      cfg.procedure = spec_.bounds;
      cfg.reference_draws = spec_.reference_draws;
      cfg.acceptance = spec_.acceptance;
      RandomStream bound_rng = RandomStream::derive(seed, {0});
      const BuiltCriterion built = build_tier_criterion(*balance_, w_obs, cfg, bound_rng);
      RandomStream key = RandomStream::derive(seed, {1});
      result = randomization_pvalue(data, statistic_spec(spec_.statistic), ConditionalOnBalance{built.criterion},
                                    opts, key());
    } else {
      result = randomization_pvalue(data, statistic_spec(spec_.statistic), CompleteRandomization{}, opts, seed);
    }
    out.retained = data.units();
  }
  out.p_value = result.p_value;
  out.t_obs = result.t_obs;
  out.draws = result.draws;
  out.acceptance_rate = result.diagnostics.acceptance_rate;
  return out;
}

}  // namespace crt
