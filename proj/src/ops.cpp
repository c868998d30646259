#include "cookgen/ops.hpp"

#include <cmath>
#include <memory>

namespace cookgen {

const char* to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::ConvWeight: return "conv_weight";
    case ParamKind::LinearWeight: return "linear_weight";
    case ParamKind::Bias: return "bias";
    case ParamKind::Norm: return "norm";
    case ParamKind::Film: return "film";
    case ParamKind::Buffer: return "buffer";
  }
  return "unknown";
}

ParamKind param_kind_from_string(const std::string& s) {
  for (ParamKind k : {ParamKind::ConvWeight, ParamKind::LinearWeight, ParamKind::Bias, ParamKind::Norm,
                      ParamKind::Film, ParamKind::Buffer})
    if (s == to_string(k)) return k;
  throw LookupError("unknown parameter kind '" + s + "'");
}

namespace {

template <typename Scalar>
bool any_grad(std::initializer_list<const Var<Scalar>*> vars) {
  for (const auto* v : vars)
    if (v && v->requires_grad()) return true;
  return false;
}

template <typename Scalar>
Tensor<Scalar>& grad_of(const Var<Scalar>& v) {
  return v.tape().grad(v.id());
}

template <typename Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (&a.tape() != &b.tape()) throw InvalidArgument("variables live on different tapes");
}

template <typename Scalar>
void require_rank(const Var<Scalar>& x, int rank, const char* op) {
  if (x.shape().rank() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     x.shape().str());
}

template <typename Scalar>
void im2col(const Scalar* x, Index channels, Index height, Index width, Index k, Index stride, Index pad,
            Index out_h, Index out_w, RowMatrix<Scalar>& cols) {
  cols.resize(channels * k * k, out_h * out_w);
  for (Index c = 0; c < channels; ++c) {
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        Scalar* dst = cols.row((c * k + ki) * k + kj).data();
        for (Index oy = 0; oy < out_h; ++oy) {
          const Index iy = oy * stride - pad + ki;
          Scalar* row = dst + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(row, row + out_w, Scalar(0));
            continue;
          }
          const Scalar* src = x + (c * height + iy) * width;
          for (Index ox = 0; ox < out_w; ++ox) {
            const Index ix = ox * stride - pad + kj;
            row[ox] = (ix >= 0 && ix < width) ? src[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& cols, Index channels, Index height, Index width, Index k, Index stride,
                Index pad, Index out_h, Index out_w, Scalar* dx) {
  for (Index c = 0; c < channels; ++c) {
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        const Scalar* src = cols.row((c * k + ki) * k + kj).data();
        for (Index oy = 0; oy < out_h; ++oy) {
          const Index iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= height) continue;
          Scalar* dst = dx + (c * height + iy) * width;
          const Scalar* row = src + oy * out_w;
          for (Index ox = 0; ox < out_w; ++ox) {
            const Index ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < width) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b);
  require_shape(b.shape(), a.shape(), "add");
  Tensor<Scalar> out(a.shape(), a.value().array() + b.value().array());
  const bool rg = any_grad<Scalar>({&a, &b});
  return a.tape().push(std::move(out), rg, [a, b](const Tensor<Scalar>& g) {
    if (a.requires_grad()) grad_of(a).array() += g.array();
    if (b.requires_grad()) grad_of(b).array() += g.array();
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b);
  require_shape(b.shape(), a.shape(), "sub");
  Tensor<Scalar> out(a.shape(), a.value().array() - b.value().array());
  const bool rg = any_grad<Scalar>({&a, &b});
  return a.tape().push(std::move(out), rg, [a, b](const Tensor<Scalar>& g) {
    if (a.requires_grad()) grad_of(a).array() += g.array();
    if (b.requires_grad()) grad_of(b).array() -= g.array();
  });
}

template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& a, Scalar alpha, Scalar beta) {
  Tensor<Scalar> out(a.shape(), alpha * a.value().array() + beta);
  return a.tape().push(std::move(out), a.requires_grad(),
                       [a, alpha](const Tensor<Scalar>& g) { grad_of(a).array() += alpha * g.array(); });
}

template <typename Scalar>
Var<Scalar> silu(const Var<Scalar>& x) {
  const auto& v = x.value().array();
  auto sig = std::make_shared<typename Tensor<Scalar>::Array>((Scalar(1) + (-v).exp()).inverse());
  Tensor<Scalar> out(x.shape(), v * (*sig));
  return x.tape().push(std::move(out), x.requires_grad(), [x, sig](const Tensor<Scalar>& g) {
    const auto& v = x.value().array();
    grad_of(x).array() += g.array() * (*sig) * (Scalar(1) + v * (Scalar(1) - *sig));
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().array().max(Scalar(0)));
  return x.tape().push(std::move(out), x.requires_grad(), [x](const Tensor<Scalar>& g) {
    grad_of(x).array() += (x.value().array() > Scalar(0)).select(g.array(), Scalar(0));
  });
}

template <typename Scalar>
Var<Scalar> leaky_relu(const Var<Scalar>& x, Scalar slope) {
  const auto& v = x.value().array();
  Tensor<Scalar> out(x.shape(), (v > Scalar(0)).select(v, slope * v));
  return x.tape().push(std::move(out), x.requires_grad(), [x, slope](const Tensor<Scalar>& g) {
    grad_of(x).array() += (x.value().array() > Scalar(0)).select(g.array(), slope * g.array());
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  auto y = std::make_shared<typename Tensor<Scalar>::Array>(x.value().array().tanh());
  Tensor<Scalar> out(x.shape(), *y);
  return x.tape().push(std::move(out), x.requires_grad(), [x, y](const Tensor<Scalar>& g) {
    grad_of(x).array() += g.array() * (Scalar(1) - y->square());
  });
}

template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const std::optional<Var<Scalar>>& bias,
                   Conv2dOptions opt) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d weight");
  const Index n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  const Index o = weight.shape()[0], k = weight.shape()[2];
  if (weight.shape()[1] != c || weight.shape()[3] != k)
    throw ShapeError("conv2d: weight " + weight.shape().str() + " incompatible with input " + x.shape().str());
  if (bias && bias->value().size() != o) throw ShapeError("conv2d: bias length mismatch");
  const Index s = opt.stride, p = opt.padding;
  const Index oh = (h + 2 * p - k) / s + 1, ow = (w + 2 * p - k) / s + 1;
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: input " + x.shape().str() + " too small for kernel");

  const bool pointwise = (k == 1 && s == 1 && p == 0);
  const bool rg = any_grad<Scalar>({&x, &weight, bias ? &*bias : nullptr});
  auto cols = std::make_shared<std::vector<RowMatrix<Scalar>>>();
  const bool keep_cols = weight.requires_grad() && !pointwise;
  if (keep_cols) cols->resize(static_cast<size_t>(n));

  Tensor<Scalar> out(Shape{n, o, oh, ow});
  const auto wm = weight.value().matrix(o, c * k * k);
  RowMatrix<Scalar> scratch;
  for (Index i = 0; i < n; ++i) {
    auto out_i = out.matrix(o, oh * ow, i * o * oh * ow);
    if (pointwise) {
      out_i.noalias() = wm * x.value().matrix(c, h * w, i * c * h * w);
    } else {
      RowMatrix<Scalar>& cm = keep_cols ? (*cols)[static_cast<size_t>(i)] : scratch;
      im2col(x.value().data() + i * c * h * w, c, h, w, k, s, p, oh, ow, cm);
      out_i.noalias() = wm * cm;
    }
    if (bias) out_i.colwise() += bias->value().array().matrix();
  }

  return x.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    const auto wm = weight.value().matrix(o, c * k * k);
    Tensor<Scalar>* dw = weight.requires_grad() ? &grad_of(weight) : nullptr;
    Tensor<Scalar>* db = (bias && bias->requires_grad()) ? &grad_of(*bias) : nullptr;
    Tensor<Scalar>* dx = x.requires_grad() ? &grad_of(x) : nullptr;
    RowMatrix<Scalar> dcols;
    for (Index i = 0; i < n; ++i) {
      const auto g_i = g.matrix(o, oh * ow, i * o * oh * ow);
      if (dw) {
        auto dwm = dw->matrix(o, c * k * k);
        if (pointwise)
          dwm.noalias() += g_i * x.value().matrix(c, h * w, i * c * h * w).transpose();
        else
          dwm.noalias() += g_i * (*cols)[static_cast<size_t>(i)].transpose();
      }
      if (db) db->array() += g_i.rowwise().sum().array();
      if (dx) {
        if (pointwise) {
          dx->matrix(c, h * w, i * c * h * w).noalias() += wm.transpose() * g_i;
        } else {
          dcols.noalias() = wm.transpose() * g_i;
          col2im_add(dcols, c, h, w, k, s, p, oh, ow, dx->data() + i * c * h * w);
        }
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> group_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta, Index groups,
                       Scalar eps) {
  require_rank(x, 4, "group_norm");
  const Index n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  if (groups <= 0 || c % groups != 0)
    throw ShapeError("group_norm: " + std::to_string(c) + " channels not divisible into " +
                     std::to_string(groups) + " groups");
  if (gamma.value().size() != c || beta.value().size() != c) throw ShapeError("group_norm: affine length mismatch");
  const Index cg = c / groups, m = cg * hw;

  auto xhat = std::make_shared<Tensor<Scalar>>(x.shape());
  auto rstd = std::make_shared<std::vector<Scalar>>(static_cast<size_t>(n * groups));
  Tensor<Scalar> out(x.shape());
  for (Index i = 0; i < n; ++i) {
    for (Index gi = 0; gi < groups; ++gi) {
      const Index off = (i * c + gi * cg) * hw;
      auto seg = x.value().array().segment(off, m);
      const Scalar mu = seg.mean();
      const Scalar var = (seg - mu).square().mean();
      const Scalar r = Scalar(1) / std::sqrt(var + eps);
      (*rstd)[static_cast<size_t>(i * groups + gi)] = r;
      xhat->array().segment(off, m) = (seg - mu) * r;
      for (Index ch = gi * cg; ch < (gi + 1) * cg; ++ch) {
        const Index co = (i * c + ch) * hw;
        out.array().segment(co, hw) =
            xhat->array().segment(co, hw) * gamma.value().array()(ch) + beta.value().array()(ch);
      }
    }
  }
  const bool rg = any_grad<Scalar>({&x, &gamma, &beta});
  return x.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    Tensor<Scalar>* dgm = gamma.requires_grad() ? &grad_of(gamma) : nullptr;
    Tensor<Scalar>* dbt = beta.requires_grad() ? &grad_of(beta) : nullptr;
    Tensor<Scalar>* dx = x.requires_grad() ? &grad_of(x) : nullptr;
    typename Tensor<Scalar>::Array dxhat(m);
    for (Index i = 0; i < n; ++i) {
      for (Index gi = 0; gi < groups; ++gi) {
        const Index off = (i * c + gi * cg) * hw;
        for (Index ch = gi * cg; ch < (gi + 1) * cg; ++ch) {
          const Index co = (i * c + ch) * hw;
          auto gs = g.array().segment(co, hw);
          auto xs = xhat->array().segment(co, hw);
          if (dgm) dgm->array()(ch) += (gs * xs).sum();
          if (dbt) dbt->array()(ch) += gs.sum();
          if (dx) dxhat.segment((ch - gi * cg) * hw, hw) = gs * gamma.value().array()(ch);
        }
        if (dx) {
          auto xs = xhat->array().segment(off, m);
          const Scalar m1 = dxhat.mean();
          const Scalar m2 = (dxhat * xs).mean();
          dx->array().segment(off, m) += (*rstd)[static_cast<size_t>(i * groups + gi)] * (dxhat - m1 - xs * m2);
        }
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta, Scalar eps,
                       Vector<Scalar>* batch_mean, Vector<Scalar>* batch_var) {
  require_rank(x, 4, "batch_norm");
  const Index n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  if (gamma.value().size() != c || beta.value().size() != c) throw ShapeError("batch_norm: affine length mismatch");
  const Scalar count = static_cast<Scalar>(n * hw);

  auto xhat = std::make_shared<Tensor<Scalar>>(x.shape());
  auto rstd = std::make_shared<Vector<Scalar>>(c);
  if (batch_mean) batch_mean->resize(c);
  if (batch_var) batch_var->resize(c);
  Tensor<Scalar> out(x.shape());
  for (Index ch = 0; ch < c; ++ch) {
    Scalar mu = 0;
    for (Index i = 0; i < n; ++i) mu += x.value().array().segment((i * c + ch) * hw, hw).sum();
    mu /= count;
    Scalar var = 0;
    for (Index i = 0; i < n; ++i) var += (x.value().array().segment((i * c + ch) * hw, hw) - mu).square().sum();
    var /= count;
    const Scalar r = Scalar(1) / std::sqrt(var + eps);
    (*rstd)(ch) = r;
    if (batch_mean) (*batch_mean)(ch) = mu;
    if (batch_var) (*batch_var)(ch) = var;
    for (Index i = 0; i < n; ++i) {
      const Index co = (i * c + ch) * hw;
      xhat->array().segment(co, hw) = (x.value().array().segment(co, hw) - mu) * r;
      out.array().segment(co, hw) =
          xhat->array().segment(co, hw) * gamma.value().array()(ch) + beta.value().array()(ch);
    }
  }
  const bool rg = any_grad<Scalar>({&x, &gamma, &beta});
  return x.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    Tensor<Scalar>* dgm = gamma.requires_grad() ? &grad_of(gamma) : nullptr;
    Tensor<Scalar>* dbt = beta.requires_grad() ? &grad_of(beta) : nullptr;
    Tensor<Scalar>* dx = x.requires_grad() ? &grad_of(x) : nullptr;
    for (Index ch = 0; ch < c; ++ch) {
      Scalar sum_g = 0, sum_gx = 0;
      for (Index i = 0; i < n; ++i) {
        const Index co = (i * c + ch) * hw;
        sum_g += g.array().segment(co, hw).sum();
        sum_gx += (g.array().segment(co, hw) * xhat->array().segment(co, hw)).sum();
      }
      if (dgm) dgm->array()(ch) += sum_gx;
      if (dbt) dbt->array()(ch) += sum_g;
      if (!dx) continue;
      const Scalar gm = gamma.value().array()(ch);
      const Scalar m1 = gm * sum_g / count, m2 = gm * sum_gx / count;
      for (Index i = 0; i < n; ++i) {
        const Index co = (i * c + ch) * hw;
        dx->array().segment(co, hw) +=
            (*rstd)(ch) * (gm * g.array().segment(co, hw) - m1 - xhat->array().segment(co, hw) * m2);
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> film(const Var<Scalar>& z, const Var<Scalar>& gamma, const Var<Scalar>& beta) {
  require_rank(z, 4, "film");
  const Index n = z.shape()[0], c = z.shape()[1], hw = z.shape()[2] * z.shape()[3];
  if (!(gamma.shape() == Shape{n, c}) || !(beta.shape() == Shape{n, c}))
    throw ShapeError("film: modulation shapes " + gamma.shape().str() + "/" + beta.shape().str() +
                     " do not match features " + z.shape().str());
  Tensor<Scalar> out(z.shape());
  for (Index i = 0; i < n; ++i)
    for (Index ch = 0; ch < c; ++ch) {
      const Index co = (i * c + ch) * hw;
      out.array().segment(co, hw) =
          gamma.value().array()(i * c + ch) * z.value().array().segment(co, hw) + beta.value().array()(i * c + ch);
    }
  const bool rg = any_grad<Scalar>({&z, &gamma, &beta});
  return z.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    for (Index i = 0; i < n; ++i)
      for (Index ch = 0; ch < c; ++ch) {
        const Index co = (i * c + ch) * hw;
        auto gs = g.array().segment(co, hw);
        if (z.requires_grad()) grad_of(z).array().segment(co, hw) += gamma.value().array()(i * c + ch) * gs;
        if (gamma.requires_grad())
          grad_of(gamma).array()(i * c + ch) += (gs * z.value().array().segment(co, hw)).sum();
        if (beta.requires_grad()) grad_of(beta).array()(i * c + ch) += gs.sum();
      }
  });
}

template <typename Scalar>
Var<Scalar> upsample_nearest2x(const Var<Scalar>& x) {
  require_rank(x, 4, "upsample_nearest2x");
  const Index nc = x.shape()[0] * x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  Tensor<Scalar> out(Shape{x.shape()[0], x.shape()[1], 2 * h, 2 * w});
  for (Index p = 0; p < nc; ++p) {
    const auto src = x.value().matrix(h, w, p * h * w);
    auto dst = out.matrix(2 * h, 2 * w, p * 4 * h * w);
    for (Index i = 0; i < 2 * h; ++i)
      for (Index j = 0; j < 2 * w; ++j) dst(i, j) = src(i / 2, j / 2);
  }
  return x.tape().push(std::move(out), x.requires_grad(), [=](const Tensor<Scalar>& g) {
    Tensor<Scalar>& dx = grad_of(x);
    for (Index p = 0; p < nc; ++p) {
      const auto gs = g.matrix(2 * h, 2 * w, p * 4 * h * w);
      auto d = dx.matrix(h, w, p * h * w);
      for (Index i = 0; i < 2 * h; ++i)
        for (Index j = 0; j < 2 * w; ++j) d(i / 2, j / 2) += gs(i, j);
    }
  });
}

template <typename Scalar>
Var<Scalar> concat_channels(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b);
  require_rank(a, 4, "concat_channels");
  require_rank(b, 4, "concat_channels");
  const Index n = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1], h = a.shape()[2], w = a.shape()[3];
  if (b.shape()[0] != n || b.shape()[2] != h || b.shape()[3] != w)
    throw ShapeError("concat_channels: " + a.shape().str() + " vs " + b.shape().str());
  const Index hw = h * w;
  Tensor<Scalar> out(Shape{n, ca + cb, h, w});
  for (Index i = 0; i < n; ++i) {
    out.array().segment(i * (ca + cb) * hw, ca * hw) = a.value().array().segment(i * ca * hw, ca * hw);
    out.array().segment((i * (ca + cb) + ca) * hw, cb * hw) = b.value().array().segment(i * cb * hw, cb * hw);
  }
  const bool rg = any_grad<Scalar>({&a, &b});
  return a.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    for (Index i = 0; i < n; ++i) {
      if (a.requires_grad())
        grad_of(a).array().segment(i * ca * hw, ca * hw) += g.array().segment(i * (ca + cb) * hw, ca * hw);
      if (b.requires_grad())
        grad_of(b).array().segment(i * cb * hw, cb * hw) += g.array().segment((i * (ca + cb) + ca) * hw, cb * hw);
    }
  });
}

template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x) {
  require_rank(x, 4, "global_avg_pool");
  const Index n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  Tensor<Scalar> out(Shape{n, c});
  out.matrix(n * c, 1) = x.value().matrix(n * c, hw).rowwise().mean();
  return x.tape().push(std::move(out), x.requires_grad(), [=](const Tensor<Scalar>& g) {
    grad_of(x).matrix(n * c, hw).colwise() += g.matrix(n * c, 1).col(0) / static_cast<Scalar>(hw);
  });
}

template <typename Scalar>
Var<Scalar> blur_downsample(const Var<Scalar>& x) {
  require_rank(x, 4, "blur_downsample");
  static constexpr Scalar kTaps[5] = {Scalar(1) / 16, Scalar(4) / 16, Scalar(6) / 16, Scalar(4) / 16,
                                      Scalar(1) / 16};
  const Index nc = x.shape()[0] * x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  const Index oh = (h + 1) / 2, ow = (w + 1) / 2;
  auto clampi = [](Index v, Index hi) { return v < 0 ? Index{0} : (v >= hi ? hi - 1 : v); };
  Tensor<Scalar> out(Shape{x.shape()[0], x.shape()[1], oh, ow});
  for (Index p = 0; p < nc; ++p) {
    const auto src = x.value().matrix(h, w, p * h * w);
    auto dst = out.matrix(oh, ow, p * oh * ow);
    for (Index i = 0; i < oh; ++i)
      for (Index j = 0; j < ow; ++j) {
        Scalar acc = 0;
        for (int a = 0; a < 5; ++a)
          for (int b = 0; b < 5; ++b)
            acc += kTaps[a] * kTaps[b] * src(clampi(2 * i + a - 2, h), clampi(2 * j + b - 2, w));
        dst(i, j) = acc;
      }
  }
  return x.tape().push(std::move(out), x.requires_grad(), [=](const Tensor<Scalar>& g) {
    Tensor<Scalar>& dx = grad_of(x);
    for (Index p = 0; p < nc; ++p) {
      const auto gs = g.matrix(oh, ow, p * oh * ow);
      auto d = dx.matrix(h, w, p * h * w);
      for (Index i = 0; i < oh; ++i)
        for (Index j = 0; j < ow; ++j)
          for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b)
              d(clampi(2 * i + a - 2, h), clampi(2 * j + b - 2, w)) += kTaps[a] * kTaps[b] * gs(i, j);
    }
  });
}

template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& x, const Var<Scalar>& weight, const std::optional<Var<Scalar>>& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear weight");
  const Index n = x.shape()[0], d = x.shape()[1], o = weight.shape()[0];
  if (weight.shape()[1] != d)
    throw ShapeError("linear: weight " + weight.shape().str() + " incompatible with input " + x.shape().str());
  if (bias && bias->value().size() != o) throw ShapeError("linear: bias length mismatch");
  Tensor<Scalar> out(Shape{n, o});
  out.matrix(n, o).noalias() = x.value().matrix(n, d) * weight.value().matrix(o, d).transpose();
  if (bias) out.matrix(n, o).rowwise() += bias->value().array().matrix().transpose();
  const bool rg = any_grad<Scalar>({&x, &weight, bias ? &*bias : nullptr});
  return x.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    const auto gm = g.matrix(n, o);
    if (x.requires_grad()) grad_of(x).matrix(n, d).noalias() += gm * weight.value().matrix(o, d);
    if (weight.requires_grad()) grad_of(weight).matrix(o, d).noalias() += gm.transpose() * x.value().matrix(n, d);
    if (bias && bias->requires_grad()) grad_of(*bias).matrix(1, o) += gm.colwise().sum();
  });
}

template <typename Scalar>
Var<Scalar> l2_normalize_rows(const Var<Scalar>& x) {
  require_rank(x, 2, "l2_normalize_rows");
  const Index n = x.shape()[0], d = x.shape()[1];
  auto norms = std::make_shared<Vector<Scalar>>(x.value().matrix(n, d).rowwise().norm());
  for (Index i = 0; i < n; ++i)
    if (!(norms->coeff(i) > Scalar(1e-12)))
      throw NumericError("degenerate embedding: row " + std::to_string(i) + " has zero norm before normalization");
  Tensor<Scalar> out(x.shape());
  out.matrix(n, d) = norms->cwiseInverse().asDiagonal() * x.value().matrix(n, d);
  auto y = std::make_shared<Tensor<Scalar>>(out);
  return x.tape().push(std::move(out), x.requires_grad(), [=](const Tensor<Scalar>& g) {
    const auto ym = y->matrix(n, d);
    const auto gm = g.matrix(n, d);
    const Vector<Scalar> proj = (ym.array() * gm.array()).rowwise().sum();
    grad_of(x).matrix(n, d) +=
        norms->cwiseInverse().asDiagonal() * (gm - proj.asDiagonal() * ym).eval();
  });
}

template <typename Scalar>
Var<Scalar> matmul_abt(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b);
  require_rank(a, 2, "matmul_abt");
  require_rank(b, 2, "matmul_abt");
  const Index n = a.shape()[0], m = b.shape()[0], d = a.shape()[1];
  if (b.shape()[1] != d) throw ShapeError("matmul_abt: " + a.shape().str() + " vs " + b.shape().str());
  Tensor<Scalar> out(Shape{n, m});
  out.matrix(n, m).noalias() = a.value().matrix(n, d) * b.value().matrix(m, d).transpose();
  const bool rg = any_grad<Scalar>({&a, &b});
  return a.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    const auto gm = g.matrix(n, m);
    if (a.requires_grad()) grad_of(a).matrix(n, d).noalias() += gm * b.value().matrix(m, d);
    if (b.requires_grad()) grad_of(b).matrix(m, d).noalias() += gm.transpose() * a.value().matrix(n, d);
  });
}

template <typename Scalar>
Var<Scalar> row_dot(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b);
  require_rank(a, 2, "row_dot");
  require_shape(b.shape(), a.shape(), "row_dot");
  const Index n = a.shape()[0], d = a.shape()[1];
  Tensor<Scalar> out(Shape{n});
  out.matrix(n, 1) = (a.value().matrix(n, d).array() * b.value().matrix(n, d).array()).rowwise().sum();
  const bool rg = any_grad<Scalar>({&a, &b});
  return a.tape().push(std::move(out), rg, [=](const Tensor<Scalar>& g) {
    const auto gv = g.matrix(n, 1).col(0);
    if (a.requires_grad()) grad_of(a).matrix(n, d) += gv.asDiagonal() * b.value().matrix(n, d);
    if (b.requires_grad()) grad_of(b).matrix(n, d) += gv.asDiagonal() * a.value().matrix(n, d);
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& x, Index begin, Index count) {
  require_rank(x, 2, "slice_cols");
  const Index n = x.shape()[0], d = x.shape()[1];
  if (begin < 0 || count < 0 || begin + count > d)
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + x.shape().str());
  Tensor<Scalar> out(Shape{n, count});
  out.matrix(n, count) = x.value().matrix(n, d).middleCols(begin, count);
  return x.tape().push(std::move(out), x.requires_grad(), [=](const Tensor<Scalar>& g) {
    grad_of(x).matrix(n, d).middleCols(begin, count) += g.matrix(n, count);
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& x) {
  const Scalar inv = Scalar(1) / static_cast<Scalar>(x.value().size());
  Tensor<Scalar> out = Tensor<Scalar>::scalar(x.value().array().sum() * inv);
  return x.tape().push(std::move(out), x.requires_grad(),
                       [x, inv](const Tensor<Scalar>& g) { grad_of(x).array() += g.item() * inv; });
}

template <typename Scalar>
Var<Scalar> mse(const Var<Scalar>& x, const Tensor<Scalar>& target) {
  require_shape(target.shape(), x.shape(), "mse");
  auto diff = std::make_shared<typename Tensor<Scalar>::Array>(x.value().array() - target.array());
  const Scalar inv = Scalar(1) / static_cast<Scalar>(diff->size());
  Tensor<Scalar> out = Tensor<Scalar>::scalar(diff->square().sum() * inv);
  return x.tape().push(std::move(out), x.requires_grad(), [x, diff, inv](const Tensor<Scalar>& g) {
    grad_of(x).array() += (Scalar(2) * inv * g.item()) * (*diff);
  });
}

template <typename Scalar>
Var<Scalar> mean_abs_diff(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b);
  require_shape(b.shape(), a.shape(), "mean_abs_diff");
  auto diff = std::make_shared<typename Tensor<Scalar>::Array>(a.value().array() - b.value().array());
  const Scalar inv = Scalar(1) / static_cast<Scalar>(diff->size());
  Tensor<Scalar> out = Tensor<Scalar>::scalar(diff->abs().sum() * inv);
  const bool rg = any_grad<Scalar>({&a, &b});
  return a.tape().push(std::move(out), rg, [a, b, diff, inv](const Tensor<Scalar>& g) {
    const typename Tensor<Scalar>::Array s = diff->sign() * (inv * g.item());
    if (a.requires_grad()) grad_of(a).array() += s;
    if (b.requires_grad()) grad_of(b).array() -= s;
  });
}

template <typename Scalar>
Var<Scalar> bce_with_logits(const Var<Scalar>& logits, Scalar label) {
  const auto& v = logits.value().array();
  const Scalar inv = Scalar(1) / static_cast<Scalar>(v.size());
  const Scalar loss = (v.max(Scalar(0)) - v * label + (Scalar(1) + (-v.abs()).exp()).log()).sum() * inv;
  return logits.tape().push(Tensor<Scalar>::scalar(loss), logits.requires_grad(),
                            [logits, label, inv](const Tensor<Scalar>& g) {
                              const auto& v = logits.value().array();
                              const auto sig = (Scalar(1) + (-v).exp()).inverse();
                              grad_of(logits).array() += (sig - label) * (inv * g.item());
                            });
}

#define COOKGEN_INSTANTIATE_OPS(S)                                                                            \
  template Var<S> add(const Var<S>&, const Var<S>&);                                                          \
  template Var<S> sub(const Var<S>&, const Var<S>&);                                                          \
  template Var<S> affine(const Var<S>&, S, S);                                                                \
  template Var<S> silu(const Var<S>&);                                                                        \
  template Var<S> relu(const Var<S>&);                                                                        \
  template Var<S> leaky_relu(const Var<S>&, S);                                                               \
  template Var<S> tanh(const Var<S>&);                                                                        \
  template Var<S> conv2d(const Var<S>&, const Var<S>&, const std::optional<Var<S>>&, Conv2dOptions);          \
  template Var<S> group_norm(const Var<S>&, const Var<S>&, const Var<S>&, Index, S);                          \
  template Var<S> batch_norm(const Var<S>&, const Var<S>&, const Var<S>&, S, Vector<S>*, Vector<S>*);         \
  template Var<S> film(const Var<S>&, const Var<S>&, const Var<S>&);                                          \
  template Var<S> upsample_nearest2x(const Var<S>&);                                                          \
  template Var<S> concat_channels(const Var<S>&, const Var<S>&);                                              \
  template Var<S> global_avg_pool(const Var<S>&);                                                             \
  template Var<S> blur_downsample(const Var<S>&);                                                             \
  template Var<S> linear(const Var<S>&, const Var<S>&, const std::optional<Var<S>>&);                         \
  template Var<S> l2_normalize_rows(const Var<S>&);                                                           \
  template Var<S> matmul_abt(const Var<S>&, const Var<S>&);                                                   \
  template Var<S> row_dot(const Var<S>&, const Var<S>&);                                                      \
  template Var<S> slice_cols(const Var<S>&, Index, Index);                                                    \
  template Var<S> mean(const Var<S>&);                                                                        \
  template Var<S> mse(const Var<S>&, const Tensor<S>&);                                                       \
  template Var<S> mean_abs_diff(const Var<S>&, const Var<S>&);                                                \
  template Var<S> bce_with_logits(const Var<S>&, S);

COOKGEN_INSTANTIATE_OPS(float)
COOKGEN_INSTANTIATE_OPS(double)

}  // namespace cookgen
