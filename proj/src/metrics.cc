#include "gdec/metrics.h"

#include "gdec/error.h"

namespace gdec {

EvalResult eval_sample(const std::set<std::string>& truth_ids,
                       const std::vector<std::string>& resp_ids) {
  EvalResult out;
  out.resp_ids = resp_ids;
  for (const auto& id : resp_ids) {
    if (truth_ids.count(id)) {
      out.corr.push_back(id);
    } else {
      out.fp.push_back(id);
    }
  }
  out.success = !out.corr.empty() && out.fp.empty();
  out.hallucination = !out.fp.empty();
  return out;
}

MetricsReport aggregate_metrics(int turns, size_t exemplar_samples,
                                const std::vector<EvalResult>& results,
                                const std::vector<std::set<std::string>>& truth_sets) {
  if (results.size() != truth_sets.size()) {
    throw LengthMismatchError("results and truth sets differ in length");
  }
  MetricsReport report;
  report.turns = turns;
  report.scored_samples = results.size();
  report.exemplar_samples = exemplar_samples;

  std::set<std::string> unique;
  for (size_t i = 0; i < results.size(); ++i) {
    const EvalResult& r = results[i];
    if (!r.error.empty()) ++report.failed_samples;
    if (r.success) ++report.success_count;
    if (r.hallucination) ++report.hallucination_count;
    report.total_resp_ids += r.resp_ids.size();
    report.total_fp += r.fp.size();
    report.total_refs += truth_sets[i].size();
    unique.insert(truth_sets[i].begin(), truth_sets[i].end());
  }
  report.unique_refs = unique.size();

  const double n = static_cast<double>(report.scored_samples);
  if (report.scored_samples > 0) {
    report.success_rate = static_cast<double>(report.success_count) / n;
    report.hallucination_rate = static_cast<double>(report.hallucination_count) / n;
  }
  report.fp_rate_sample_level = report.hallucination_rate;
  if (report.total_resp_ids > 0) {
    report.fp_rate_reference_level =
        static_cast<double>(report.total_fp) / static_cast<double>(report.total_resp_ids);
  }
  return report;
}

}  // namespace gdec
