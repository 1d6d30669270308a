#include "mxsr/activations.hpp"

#include <charconv>
#include <cmath>

#include "mxsr/error.hpp"

namespace mxsr {

namespace {

bool is_relu_family(ActivationType t) {
  return t == ActivationType::relu || t == ActivationType::lrelu || t == ActivationType::elu;
}

// Compares channel block [lo, lo+c) against [hi, hi+c) of x, writing the
// winner (max when take_max, else min) to out and the first-operand-won mask.
void compare_blocks(const Tensor4& x, std::size_t lo, std::size_t hi, std::size_t c, bool take_max,
                    Tensor4& out, std::vector<std::uint8_t>& mask) {
  const std::size_t plane = x.h() * x.w();
  mask.assign(x.n() * c * plane, 0);
  std::size_t m = 0;
  for (std::size_t b = 0; b < x.n(); ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* p = x.values().data() + x.index(b, lo + ch, 0, 0);
      const double* q = x.values().data() + x.index(b, hi + ch, 0, 0);
      double* o = out.values().data() + out.index(b, ch, 0, 0);
      for (std::size_t i = 0; i < plane; ++i, ++m) {
        const bool first = take_max ? (p[i] >= q[i]) : (p[i] <= q[i]);
        mask[m] = first ? 1 : 0;
        o[i] = first ? p[i] : q[i];
      }
    }
  }
}

// Scatters grad (n, c, h, w) to channel blocks lo and hi of grad_x according
// to mask: the selected operand receives sign*grad.
void route_blocks(const Tensor4& grad, const std::vector<std::uint8_t>& mask, std::size_t lo,
                  std::size_t hi, double sign, Tensor4& grad_x) {
  const std::size_t plane = grad.h() * grad.w();
  std::size_t m = 0;
  for (std::size_t b = 0; b < grad.n(); ++b) {
    for (std::size_t ch = 0; ch < grad.c(); ++ch) {
      const double* g = grad.values().data() + grad.index(b, ch, 0, 0);
      double* p = grad_x.values().data() + grad_x.index(b, lo + ch, 0, 0);
      double* q = grad_x.values().data() + grad_x.index(b, hi + ch, 0, 0);
      for (std::size_t i = 0; i < plane; ++i, ++m) {
        if (mask[m]) {
          p[i] += sign * g[i];
        } else {
          q[i] += sign * g[i];
        }
      }
    }
  }
}

}  // namespace

Activation Activation::mu_r(std::uint32_t depth) {
  if (depth < 1) throw ConfigurationError("mu-r depth must be >= 1");
  Activation a{ActivationType::mu_r};
  a.depth = depth;
  return a;
}

std::string to_string(const Activation& a) {
  switch (a.type) {
    case ActivationType::relu: return "relu";
    case ActivationType::lrelu: return "lrelu";
    case ActivationType::elu: return "elu";
    case ActivationType::mu: return "mu";
    case ActivationType::mu_d: return "mu-d";
    case ActivationType::mu_m: return "mu-m";
    case ActivationType::mu_s: return "mu-s";
    case ActivationType::mu_r: return "mu-r:" + std::to_string(a.depth);
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu();
  if (name == "lrelu") return Activation::lrelu();
  if (name == "elu") return Activation::elu();
  if (name == "mu") return Activation::mu();
  if (name == "mu-d") return Activation::mu_d();
  if (name == "mu-m") return Activation::mu_m();
  if (name == "mu-s") return Activation::mu_s();
  if (name.starts_with("mu-r:")) {
    auto digits = name.substr(5);
    std::uint32_t depth = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), depth);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && depth >= 1) {
      return Activation::mu_r(depth);
    }
  }
  throw ConfigurationError("unknown activation '" + std::string(name) +
                           "' (expected relu, lrelu, elu, mu, mu-d, mu-m, mu-s, mu-r:<n>)");
}

std::vector<Activation> all_activation_kinds() {
  return {Activation::relu(), Activation::lrelu(), Activation::elu(),  Activation::mu(),
          Activation::mu_d(), Activation::mu_m(),  Activation::mu_s(), Activation::mu_r(2)};
}

std::size_t act_output_channels(const Activation& a, std::size_t c_in) {
  auto fail = [&](std::size_t divisor) -> std::size_t {
    throw ArityError("activation " + to_string(a) + " needs channels divisible by " +
                     std::to_string(divisor) + ", got c_in=" + std::to_string(c_in));
  };
  if (c_in == 0) fail(1);
  switch (a.type) {
    case ActivationType::relu:
    case ActivationType::lrelu:
    case ActivationType::elu:
      return c_in;
    case ActivationType::mu:
    case ActivationType::mu_m:
      return c_in % 2 == 0 ? c_in / 2 : fail(2);
    case ActivationType::mu_s:
      return c_in % 2 == 0 ? c_in : fail(2);
    case ActivationType::mu_d:
      return c_in % 4 == 0 ? c_in / 4 : fail(4);
    case ActivationType::mu_r: {
      if (a.depth < 1 || a.depth >= 32) throw ConfigurationError("mu-r depth out of range");
      const std::size_t divisor = std::size_t{1} << a.depth;
      return c_in % divisor == 0 ? c_in / divisor : fail(divisor);
    }
  }
  return c_in;
}

ActivationResult act_forward(const Activation& a, const Tensor4& x) {
  act_output_channels(a, x.c());
  ActivationResult r;
  r.trace.kind = a;
  r.trace.input_shape = x.shape();

  if (is_relu_family(a.type)) {
    r.output = Tensor4(x.shape());
    auto in = x.values();
    auto out = r.output.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double v = in[i];
      switch (a.type) {
        case ActivationType::relu: out[i] = v > 0.0 ? v : 0.0; break;
        case ActivationType::lrelu: out[i] = v > 0.0 ? v : a.slope * v; break;
        default: out[i] = v > 0.0 ? v : a.alpha * std::expm1(v); break;
      }
    }
    r.trace.input = x;
    r.trace.output_shape = r.output.shape();
    return r;
  }

  const std::size_t half = x.c() / 2;
  const Shape4 half_shape{x.n(), half, x.h(), x.w()};
  switch (a.type) {
    case ActivationType::mu:
    case ActivationType::mu_m: {
      r.output = Tensor4(half_shape);
      r.trace.masks.emplace_back();
      compare_blocks(x, 0, half, half, a.type == ActivationType::mu, r.output, r.trace.masks[0]);
      r.trace.mask_shapes.push_back(half_shape);
      break;
    }
    case ActivationType::mu_s: {
      Tensor4 hi(half_shape), lo(half_shape);
      r.trace.masks.emplace_back();
      compare_blocks(x, 0, half, half, true, hi, r.trace.masks[0]);
      // The min half is the loser of the same comparison.
      const auto& mask = r.trace.masks[0];
      const std::size_t plane = x.h() * x.w();
      std::size_t m = 0;
      for (std::size_t b = 0; b < x.n(); ++b) {
        for (std::size_t ch = 0; ch < half; ++ch) {
          const double* p = x.values().data() + x.index(b, ch, 0, 0);
          const double* q = x.values().data() + x.index(b, half + ch, 0, 0);
          double* o = lo.values().data() + lo.index(b, ch, 0, 0);
          for (std::size_t i = 0; i < plane; ++i, ++m) o[i] = mask[m] ? q[i] : p[i];
        }
      }
      const Tensor4 parts[] = {std::move(hi), std::move(lo)};
      r.output = concat_channels(parts);
      r.trace.mask_shapes.push_back(half_shape);
      break;
    }
    case ActivationType::mu_d: {
      const std::size_t q = x.c() / 4;
      const Shape4 quarter{x.n(), q, x.h(), x.w()};
      Tensor4 first(quarter), second(quarter);
      r.trace.masks.resize(2);
      compare_blocks(x, 0, q, q, true, first, r.trace.masks[0]);
      compare_blocks(x, 2 * q, 3 * q, q, true, second, r.trace.masks[1]);
      r.trace.mask_shapes = {quarter, quarter};
      r.output = sub(first, second);
      break;
    }
    case ActivationType::mu_r: {
      Tensor4 current = x;
      for (std::uint32_t level = 0; level < a.depth; ++level) {
        const std::size_t c = current.c() / 2;
        Tensor4 next(Shape4{x.n(), c, x.h(), x.w()});
        r.trace.masks.emplace_back();
        compare_blocks(current, 0, c, c, true, next, r.trace.masks.back());
        r.trace.mask_shapes.push_back(next.shape());
        current = std::move(next);
      }
      r.output = std::move(current);
      break;
    }
    default:
      break;
  }
  r.trace.output_shape = r.output.shape();
  return r;
}

Tensor4 act_backward(const Activation& a, const ActivationTrace& trace, const Tensor4& grad_a) {
  if (!trace.valid()) throw StateError("act_backward: no trace recorded for " + to_string(a));
  if (!(trace.kind == a)) {
    throw StateError("act_backward: trace was recorded for " + to_string(trace.kind) + ", not " +
                     to_string(a));
  }
  if (grad_a.shape() != trace.output_shape) {
    throw DimensionError("act_backward: gradient shape " + to_string(grad_a.shape()) +
                         " != activation output " + to_string(trace.output_shape));
  }

  Tensor4 grad_x(trace.input_shape);
  if (is_relu_family(a.type)) {
    auto in = trace.input.values();
    auto g = grad_a.values();
    auto out = grad_x.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double v = in[i];
      double d = 1.0;
      if (v <= 0.0) {
        switch (a.type) {
          case ActivationType::relu: d = 0.0; break;
          case ActivationType::lrelu: d = a.slope; break;
          default: d = a.alpha * std::exp(v); break;
        }
      }
      out[i] = d * g[i];
    }
    return grad_x;
  }

  const std::size_t half = trace.input_shape.c / 2;
  switch (a.type) {
    case ActivationType::mu:
    case ActivationType::mu_m:
      route_blocks(grad_a, trace.masks[0], 0, half, 1.0, grad_x);
      break;
    case ActivationType::mu_s: {
      const auto parts = split_channels(grad_a, 2);
      const auto& mask = trace.masks[0];
      // Max half flows to winners; the inverted mask sends the min half to losers.
      route_blocks(parts[0], mask, 0, half, 1.0, grad_x);
      std::vector<std::uint8_t> inverted(mask.size());
      for (std::size_t i = 0; i < mask.size(); ++i) inverted[i] = mask[i] ? 0 : 1;
      route_blocks(parts[1], inverted, 0, half, 1.0, grad_x);
      break;
    }
    case ActivationType::mu_d: {
      const std::size_t q = trace.input_shape.c / 4;
      route_blocks(grad_a, trace.masks[0], 0, q, 1.0, grad_x);
      route_blocks(grad_a, trace.masks[1], 2 * q, 3 * q, -1.0, grad_x);
      break;
    }
    case ActivationType::mu_r: {
      Tensor4 g = grad_a;
      for (std::size_t level = trace.masks.size(); level-- > 0;) {
        const Shape4 s = trace.mask_shapes[level];
        Tensor4 wider(Shape4{s.n, s.c * 2, s.h, s.w});
        route_blocks(g, trace.masks[level], 0, s.c, 1.0, wider);
        g = std::move(wider);
      }
      grad_x = std::move(g);
      break;
    }
    default:
      break;
  }
  return grad_x;
}

}  // namespace mxsr
