#pragma once

#include <span>
#include <variant>
#include <vector>

#include "qkdad/deep_svdd.hpp"
#include "qkdad/svdd_baseline.hpp"

namespace qkdad {

/// Either detector kind behind one scoring surface. All score functions
/// share the anomaly-positive sign convention.
using AnyModel = std::variant<deepsvdd::DeepSvddModel, baseline::SvddDualModel>;

inline std::size_t model_input_dim(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.input_dim(); }, model);
}

inline double model_score(const AnyModel& model, std::span<const double> x) {
  if (const auto* deep = std::get_if<deepsvdd::DeepSvddModel>(&model))
    return deepsvdd::score(*deep, x);
  return baseline::svdd_score(std::get<baseline::SvddDualModel>(model), x);
}

inline std::vector<double> model_score_batch(const AnyModel& model, const Matrix& rows) {
  if (const auto* deep = std::get_if<deepsvdd::DeepSvddModel>(&model))
    return deepsvdd::score_batch(*deep, rows);
  return baseline::svdd_score_batch(std::get<baseline::SvddDualModel>(model), rows);
}

}  // namespace qkdad
