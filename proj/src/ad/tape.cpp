#include "fluctsel/ad/tape.hpp"

namespace fluctsel::ad {

namespace detail {
Tape& require_tape() {
  if (!active_tape) fail(Errc::InvalidArgument, "ad::Var used without an active Recorder");
  return *active_tape;
}
}  // namespace detail

double Tape::output_value() const {
  if (!sealed()) fail(Errc::InvalidArgument, "Tape: no output recorded");
  return values_[output_];
}

std::uint32_t Tape::push(Op op, std::uint32_t a, std::uint32_t b, double c, double value) {
  if (sealed()) fail(Errc::InvalidArgument, "Tape: recording on a sealed tape");
  nodes_.push_back({op, a, b, c});
  values_.push_back(value);
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::vector<double> Tape::gradient() const {
  if (!sealed()) fail(Errc::InvalidArgument, "Tape: no output recorded");
  std::vector<double> adj;
  reverse<double>(values_, adj);
  std::vector<double> g(inputs_.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) g[i] = adj[inputs_[i]];
  return g;
}

std::vector<double> Tape::gradient(std::span<const double> x, double* value) const {
  std::vector<double> v, adj;
  const double y = forward<double>(x, v);
  if (!std::isfinite(y)) fail(Errc::NonFiniteValue, "Tape::gradient: non-finite function value");
  if (value) *value = y;
  reverse<double>(v, adj);
  std::vector<double> g(inputs_.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) g[i] = adj[inputs_[i]];
  return g;
}

Eigen::MatrixXd Tape::hessian_block(std::span<const double> x,
                                    std::span<const std::size_t> block) const {
  const std::size_t n = inputs_.size();
  const std::size_t k = block.size();
  for (std::size_t b : block)
    if (b >= n) fail(Errc::InvalidArgument, "hessian_block: index out of range");
  Eigen::MatrixXd h(k, k);
  std::vector<Dual1> in(n), v, adj;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) in[i] = Dual1(x[i], i == block[j] ? 1.0 : 0.0);
    Dual1 y = forward<Dual1>(in, v);
    if (!std::isfinite(y.val) || !std::isfinite(y.tan))
      fail(Errc::NonFiniteValue, "hessian_block: non-finite function value");
    reverse<Dual1>(v, adj);
    for (std::size_t i = 0; i < k; ++i) h(i, j) = adj[inputs_[block[i]]].tan;
  }
  Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  return sym;
}

Var::Var(double c) {
  Tape& t = detail::require_tape();
  idx_ = t.push(Op::Const, Tape::npos, Tape::npos, c, c);
  val_ = c;
}

Var Var::make(Op op, std::uint32_t a, std::uint32_t b, double c, double value) {
  Tape& t = detail::require_tape();
  return Var(t.push(op, a, b, c, value), value);
}

Var& Var::operator+=(const Var& o) { return *this = *this + o; }
Var& Var::operator-=(const Var& o) { return *this = *this - o; }
Var& Var::operator*=(const Var& o) { return *this = *this * o; }
Var& Var::operator/=(const Var& o) { return *this = *this / o; }

Recorder::Recorder(Tape& tape) : tape_(tape), previous_(detail::active_tape) {
  detail::active_tape = &tape_;
}

Recorder::~Recorder() { detail::active_tape = previous_; }

Var Recorder::input(double x) {
  const auto slot = static_cast<std::uint32_t>(tape_.inputs_.size());
  Var v = Var::make(Op::Input, slot, Tape::npos, 0.0, x);
  tape_.inputs_.push_back(v.index());
  tape_.input_values_.push_back(x);
  return v;
}

void Recorder::output(const Var& y) { tape_.output_ = y.index(); }

constexpr auto N = Tape::npos;

Var operator+(const Var& a, const Var& b) { return Var::make(Op::Add, a.index(), b.index(), 0, a.value() + b.value()); }
Var operator-(const Var& a, const Var& b) { return Var::make(Op::Sub, a.index(), b.index(), 0, a.value() - b.value()); }
Var operator*(const Var& a, const Var& b) { return Var::make(Op::Mul, a.index(), b.index(), 0, a.value() * b.value()); }
Var operator/(const Var& a, const Var& b) { return Var::make(Op::Div, a.index(), b.index(), 0, a.value() / b.value()); }
Var operator-(const Var& a) { return Var::make(Op::Neg, a.index(), N, 0, -a.value()); }
Var operator+(const Var& a, double c) { return Var::make(Op::AddC, a.index(), N, c, a.value() + c); }
Var operator+(double c, const Var& a) { return a + c; }
Var operator-(const Var& a, double c) { return Var::make(Op::AddC, a.index(), N, -c, a.value() - c); }
Var operator-(double c, const Var& a) { return Var::make(Op::CSub, a.index(), N, c, c - a.value()); }
Var operator*(const Var& a, double c) { return Var::make(Op::MulC, a.index(), N, c, a.value() * c); }
Var operator*(double c, const Var& a) { return a * c; }
Var operator/(const Var& a, double c) { return Var::make(Op::MulC, a.index(), N, 1.0 / c, a.value() * (1.0 / c)); }
Var operator/(double c, const Var& a) { return Var::make(Op::CDiv, a.index(), N, c, c / a.value()); }

Var exp(const Var& a) { return Var::make(Op::Exp, a.index(), N, 0, std::exp(a.value())); }
Var log(const Var& a) { return Var::make(Op::Log, a.index(), N, 0, std::log(a.value())); }
Var log1p(const Var& a) { return Var::make(Op::Log1p, a.index(), N, 0, std::log1p(a.value())); }
Var sqrt(const Var& a) { return Var::make(Op::Sqrt, a.index(), N, 0, std::sqrt(a.value())); }
Var square(const Var& a) { return Var::make(Op::Square, a.index(), N, 0, a.value() * a.value()); }
Var recip(const Var& a) { return Var::make(Op::Recip, a.index(), N, 0, 1.0 / a.value()); }
Var tanh(const Var& a) { return Var::make(Op::Tanh, a.index(), N, 0, std::tanh(a.value())); }
Var pow(const Var& a, double c) { return Var::make(Op::PowC, a.index(), N, c, std::pow(a.value(), c)); }

}  // namespace fluctsel::ad
