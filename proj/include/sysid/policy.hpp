#pragma once

#include <functional>
#include <variant>

#include "sysid/core.hpp"

namespace sysid {

/// Causal input policy for x_{t+1} = A x_t + B u_t + w_t.
class Policy {
 public:
  struct Constant {
    Vector u;
  };
  struct Feedback {
    Matrix K;  // p x d
    Vector c;  // p
  };
  /// Receives the observed states x_1..x_t (d x t) and past inputs
  /// u_0..u_{t-1} (p x t); returns u_t. Nothing later is visible to it.
  using Callback = std::function<Vector(const Eigen::Ref<const Matrix>& states,
                                        const Eigen::Ref<const Matrix>& inputs)>;
  struct External {
    Callback fn;
  };

  enum class Kind { constant, feedback, external };

  static Policy constant(Vector u);
  /// u_t = K x_t + c.
  static Policy feedback(Matrix K, Vector c);
  static Policy external(Callback fn);

  Kind kind() const;
  bool exact_moments() const { return kind() != Kind::external; }

  const Constant& as_constant() const { return std::get<Constant>(impl_); }
  const Feedback& as_feedback() const { return std::get<Feedback>(impl_); }

  /// Throws InputError unless the policy conforms to state dimension d and input dimension p.
  void validate(Eigen::Index d, Eigen::Index p) const;

  /// u_t given x_t and the history (x_1..x_t as columns, u_0..u_{t-1} as columns).
  /// Constant and feedback policies ignore the history.
  Vector input(const Vector& x_t, const Eigen::Ref<const Matrix>& states,
               const Eigen::Ref<const Matrix>& inputs) const;

 private:
  explicit Policy(std::variant<Constant, Feedback, External> impl) : impl_(std::move(impl)) {}
  std::variant<Constant, Feedback, External> impl_;
};

}  // namespace sysid
