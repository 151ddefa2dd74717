#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "imcabs/expr.hpp"
#include "imcabs/geometry.hpp"

namespace imcabs {

/// How noise enters the next state.
enum class NoiseStructure {
  Additive,        // x_i' = g_i(x) + w_i
  Multiplicative,  // x_i' = g_i(x) * w_i
  General,         // anything else; handled through interval extension over noise cells
};

/// Declared monotonicity of component i in its own noise variable (general structure only).
enum class Monotonicity { Unknown, Increasing, Decreasing };

NoiseStructure parse_structure(std::string_view name);
std::string_view to_string(NoiseStructure s);

/// Image of a state region under the noise-free map g; exact or conservative.
using PosteriorBox = Box;

/// Stochastic dynamics x' = f(x, w) with one noise variable per state component.
class DynamicsModel {
 public:
  DynamicsModel(std::vector<Expr> components, NoiseStructure structure,
                std::vector<Monotonicity> monotonicity = {});

  std::size_t dim() const { return components_.size(); }
  NoiseStructure structure() const { return structure_; }
  bool is_structured() const { return structure_ != NoiseStructure::General; }

  /// f_i(x, w) in full.
  const Expr& component(std::size_t i) const { return components_[i]; }
  /// g_i(x) for additive and multiplicative models; empty for general.
  const Expr& nominal(std::size_t i) const { return nominal_[i]; }
  Monotonicity monotonicity(std::size_t i) const { return monotonicity_[i]; }

 private:
  std::vector<Expr> components_;
  std::vector<Expr> nominal_;
  std::vector<Monotonicity> monotonicity_;
  NoiseStructure structure_;
};

/// One expression per component. A structured component written without any
/// noise variable is read as g_i(x) + w_i or g_i(x) * w_i. Components that
/// reference noise must match the declared structure syntactically, and
/// component i may only reference w_i.
DynamicsModel parse_dynamics(std::span<const std::string> lines, std::size_t n,
                             NoiseStructure structure, std::vector<Monotonicity> monotonicity = {});

/// Same, with components given one per non-blank line of `text`.
DynamicsModel parse_dynamics(std::string_view text, std::size_t n, NoiseStructure structure,
                             std::vector<Monotonicity> monotonicity = {});

Eigen::VectorXd eval_point(const DynamicsModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& w);

/// Natural interval extension of `expr` over xbox x wbox.
Interval interval_extension(const Expr& expr, const Box& xbox, const Box& wbox);

/// Interval hull of g(q) for structured models.
PosteriorBox posterior_f(const DynamicsModel& model, const Box& q);

/// Over-approximation of Post(q, c) = { f(x, w) : x in q, w in c }.
Box posterior(const DynamicsModel& model, const Box& q, const Box& c);

/// Post(q, c) for a structured model given an already known Post_f(q).
Box posterior_from_f(NoiseStructure structure, const PosteriorBox& postf, const Box& c);

}  // namespace imcabs
