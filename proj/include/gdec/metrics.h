/*!
 * \file gdec/metrics.h
 * \brief Per-sample scoring and per-run aggregates for the multi-turn eval.
 *
 * A sample is successful when it cites at least one correct document id and
 * no hallucinated one; a hallucination is any extracted id outside the
 * ground-truth set. The false-positive rate is reported under both plausible
 * definitions: sample-level (fraction of samples with any false positive,
 * identical to the hallucination rate) and reference-level
 * (sum |fp| / sum |resp_ids|).
 */
#pragma once

#include <set>
#include <string>
#include <vector>

namespace gdec {

struct EvalResult {
  std::string sample_id;
  std::vector<std::string> resp_ids;  // deduplicated, first-occurrence order
  std::vector<std::string> corr;      // resp_ids that are ground truth
  std::vector<std::string> fp;        // resp_ids that are hallucinated
  bool success = false;               // |corr| > 0 and |fp| == 0
  bool hallucination = false;         // |fp| > 0
  std::string raw_response;
  std::string error;  // decode/client failure; such samples score as failures
};

/// Scores one sample: corr keeps resp_ids order; success and hallucination
/// can never both hold.
EvalResult eval_sample(const std::set<std::string>& truth_ids,
                       const std::vector<std::string>& resp_ids);

struct MetricsReport {
  int turns = 0;
  size_t scored_samples = 0;
  size_t exemplar_samples = 0;
  size_t failed_samples = 0;

  size_t success_count = 0;
  size_t hallucination_count = 0;
  size_t total_resp_ids = 0;
  size_t total_fp = 0;

  double success_rate = 0.0;
  double hallucination_rate = 0.0;        // == sample-level FP rate
  double fp_rate_sample_level = 0.0;
  double fp_rate_reference_level = 0.0;   // total_fp / total_resp_ids

  size_t total_refs = 0;   // sum of |truth_ids| over scored samples
  size_t unique_refs = 0;  // distinct truth ids over scored samples
};

/// Recomputes every aggregate from per-sample results; truth sets supply the
/// reference counts. Rates over zero denominators are 0.
MetricsReport aggregate_metrics(int turns, size_t exemplar_samples,
                                const std::vector<EvalResult>& results,
                                const std::vector<std::set<std::string>>& truth_sets);

}  // namespace gdec
