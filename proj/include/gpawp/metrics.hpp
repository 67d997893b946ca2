#pragma once

#include <vector>

#include "gpawp/error.hpp"

namespace gpawp {

struct MetricsRecord {
  double micro_f{};
  double macro_f{};
  std::vector<std::vector<int>> confusion;  // [truth][prediction]
  std::size_t param_count{};
};

// Micro-F equals accuracy for single-label multiclass; Macro-F is the
// unweighted mean of per-class F1, where a class absent from both
// predictions and truths contributes zero.
inline MetricsRecord compute_metrics(const std::vector<int>& predictions,
                                     const std::vector<int>& truths, int num_classes) {
  if (predictions.size() != truths.size())
    throw ContractError("prediction/truth length mismatch: " +
                        std::to_string(predictions.size()) + " vs " +
                        std::to_string(truths.size()));
  if (predictions.empty()) throw ContractError("metrics over zero predictions");

  MetricsRecord rec;
  rec.confusion.assign(num_classes, std::vector<int>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    int p = predictions[i], t = truths[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes)
      throw ContractError("label outside class set at position " + std::to_string(i));
    ++rec.confusion[t][p];
    if (p == t) ++correct;
  }
  rec.micro_f = static_cast<double>(correct) / static_cast<double>(predictions.size());

  double macro = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    int tp = rec.confusion[c][c];
    int fn = 0, fp = 0;
    for (int o = 0; o < num_classes; ++o) {
      if (o != c) {
        fn += rec.confusion[c][o];
        fp += rec.confusion[o][c];
      }
    }
    double denom = 2.0 * tp + fp + fn;
    macro += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  rec.macro_f = macro / static_cast<double>(num_classes);
  return rec;
}

}  // namespace gpawp
