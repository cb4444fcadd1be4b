#include "sysid/policy.hpp"

#include <string>

namespace sysid {

Policy Policy::constant(Vector u) {
  require_finite(u, "constant input");
  return Policy(Constant{std::move(u)});
}

Policy Policy::feedback(Matrix K, Vector c) {
  require_finite(K, "feedback gain K");
  require_finite(c, "feedback offset c");
  if (K.rows() != c.size()) throw InputError("feedback gain K and offset c disagree on p");
  return Policy(Feedback{std::move(K), std::move(c)});
}

Policy Policy::external(Callback fn) {
  if (!fn) throw InputError("external policy needs a callback");
  return Policy(External{std::move(fn)});
}

Policy::Kind Policy::kind() const {
  switch (impl_.index()) {
    case 0:
      return Kind::constant;
    case 1:
      return Kind::feedback;
    default:
      return Kind::external;
  }
}

void Policy::validate(Eigen::Index d, Eigen::Index p) const {
  if (const auto* c = std::get_if<Constant>(&impl_)) {
    if (c->u.size() != p) {
      throw InputError("constant input has length " + std::to_string(c->u.size()) +
                       ", expected " + std::to_string(p));
    }
  } else if (const auto* f = std::get_if<Feedback>(&impl_)) {
    if (f->K.rows() != p || f->K.cols() != d) {
      throw InputError("feedback gain K must be " + std::to_string(p) + "x" + std::to_string(d));
    }
  }
}

Vector Policy::input(const Vector& x_t, const Eigen::Ref<const Matrix>& states,
                     const Eigen::Ref<const Matrix>& inputs) const {
  if (const auto* c = std::get_if<Constant>(&impl_)) return c->u;
  if (const auto* f = std::get_if<Feedback>(&impl_)) return f->K * x_t + f->c;
  return std::get<External>(impl_).fn(states, inputs);
}

}  // namespace sysid
