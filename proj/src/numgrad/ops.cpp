#include "emolign/numgrad/ops.hpp"

#include <cmath>

namespace emolign::numgrad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

void accumulate(const std::shared_ptr<Node>& n, const Array& contribution) {
  n->ensure_grad();
  n->grad += contribution;
}

// x:[B,C,H,W] slice b -> column matrix [H*W, C*9] of the 3x3 neighborhoods,
// zero padded by one pixel.
void im2col3x3(const double* x, int c_in, int h, int w, RowMat& col) {
  col.setZero(h * w, c_in * 9);
  for (int c = 0; c < c_in; ++c) {
    const double* plane = x + static_cast<std::ptrdiff_t>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double* row = col.data() + static_cast<std::ptrdiff_t>(y * w + xx) * col.cols() + c * 9;
        for (int i = -1; i <= 1; ++i) {
          int yy = y + i;
          if (yy < 0 || yy >= h) continue;
          for (int j = -1; j <= 1; ++j) {
            int xj = xx + j;
            if (xj < 0 || xj >= w) continue;
            row[(i + 1) * 3 + (j + 1)] = plane[yy * w + xj];
          }
        }
      }
    }
  }
}

// Scatter-add of the column gradient back onto the input plane layout.
void col2im3x3(const RowMat& dcol, int c_in, int h, int w, double* dx) {
  for (int c = 0; c < c_in; ++c) {
    double* plane = dx + static_cast<std::ptrdiff_t>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const double* row = dcol.data() + static_cast<std::ptrdiff_t>(y * w + xx) * dcol.cols() + c * 9;
        for (int i = -1; i <= 1; ++i) {
          int yy = y + i;
          if (yy < 0 || yy >= h) continue;
          for (int j = -1; j <= 1; ++j) {
            int xj = xx + j;
            if (xj < 0 || xj >= w) continue;
            plane[yy * w + xj] += row[(i + 1) * 3 + (j + 1)];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1)
    throw ValidationError("dense: expected ranks (2,2,1), got x" + shape_str(x.shape()) + " w" +
                          shape_str(w.shape()) + " b" + shape_str(b.shape()));
  const int batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  if (w.dim(0) != in || b.dim(0) != out)
    throw ValidationError("dense: shape mismatch, x" + shape_str(x.shape()) + " vs w" +
                          shape_str(w.shape()) + " vs b" + shape_str(b.shape()));

  MapConstMat xm(x.values().data(), batch, in);
  MapConstMat wm(w.values().data(), in, out);
  Array y(static_cast<Eigen::Index>(batch) * out);
  MapMat ym(y.data(), batch, out);
  ym.noalias() = xm * wm;
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.values().data(), out);

  auto xn = x.node(), wn = w.node(), bn = b.node();
  return make_op("dense", {batch, out}, std::move(y), {x, w, b}, [=](Node& self) {
    MapConstMat g(self.grad.data(), batch, out);
    MapConstMat xv(xn->value.data(), batch, in);
    MapConstMat wv(wn->value.data(), in, out);
    if (xn->requires_grad) {
      xn->ensure_grad();
      MapMat dx(xn->grad.data(), batch, in);
      dx.noalias() += g * wv.transpose();
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      MapMat dw(wn->grad.data(), in, out);
      dw.noalias() += xv.transpose() * g;
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      Eigen::Map<Eigen::RowVectorXd> db(bn->grad.data(), out);
      db += g.colwise().sum();
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& b) {
  if (x.rank() != 4 || k.rank() != 4 || b.rank() != 1)
    throw ValidationError("conv2d: expected ranks (4,4,1), got x" + shape_str(x.shape()) + " k" +
                          shape_str(k.shape()) + " b" + shape_str(b.shape()));
  const int batch = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int filters = k.dim(0);
  if (k.dim(2) != 3 || k.dim(3) != 3)
    throw ValidationError("conv2d: kernel must be 3x3, got " + shape_str(k.shape()));
  if (k.dim(1) != c_in)
    throw ValidationError("conv2d: channel mismatch, x" + shape_str(x.shape()) + " vs k" +
                          shape_str(k.shape()));
  if (b.dim(0) != filters)
    throw ValidationError("conv2d: bias size " + shape_str(b.shape()) + " vs " +
                          std::to_string(filters) + " filters");

  const int hw = h * w;
  Array y(static_cast<Eigen::Index>(batch) * filters * hw);
  MapConstMat km(k.values().data(), filters, c_in * 9);
  RowMat col;
  RowMat outm(hw, filters);
  for (int bi = 0; bi < batch; ++bi) {
    im2col3x3(x.values().data() + static_cast<std::ptrdiff_t>(bi) * c_in * hw, c_in, h, w, col);
    outm.noalias() = col * km.transpose();
    for (int f = 0; f < filters; ++f) {
      Eigen::Map<Eigen::VectorXd> plane(y.data() + (static_cast<std::ptrdiff_t>(bi) * filters + f) * hw, hw);
      plane = outm.col(f).array() + b.values()[f];
    }
  }

  auto xn = x.node(), kn = k.node(), bn = b.node();
  return make_op("conv2d", {batch, filters, h, w}, std::move(y), {x, k, b}, [=](Node& self) {
    RowMat colb, gmat(hw, filters), dcol;
    for (int bi = 0; bi < batch; ++bi) {
      for (int f = 0; f < filters; ++f)
        gmat.col(f) = Eigen::Map<const Eigen::VectorXd>(
            self.grad.data() + (static_cast<std::ptrdiff_t>(bi) * filters + f) * hw, hw);
      if (kn->requires_grad || bn->requires_grad) {
        if (bn->requires_grad) {
          bn->ensure_grad();
          Eigen::Map<Eigen::RowVectorXd> db(bn->grad.data(), filters);
          db += gmat.colwise().sum();
        }
        if (kn->requires_grad) {
          im2col3x3(xn->value.data() + static_cast<std::ptrdiff_t>(bi) * c_in * hw, c_in, h, w, colb);
          kn->ensure_grad();
          MapMat dk(kn->grad.data(), filters, c_in * 9);
          dk.noalias() += gmat.transpose() * colb;
        }
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        MapConstMat kv(kn->value.data(), filters, c_in * 9);
        dcol.noalias() = gmat * kv;
        col2im3x3(dcol, c_in, h, w, xn->grad.data() + static_cast<std::ptrdiff_t>(bi) * c_in * hw);
      }
    }
  });
}

Tensor maxpool2(const Tensor& x) {
  if (x.rank() != 4)
    throw ValidationError("maxpool2: expected rank 4, got " + shape_str(x.shape()));
  const int batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0)
    throw ValidationError("maxpool2: spatial size must be even, got " + shape_str(x.shape()));
  const int ho = h / 2, wo = w / 2;

  Array y(static_cast<Eigen::Index>(batch) * c * ho * wo);
  auto argmax = std::make_shared<std::vector<Eigen::Index>>(y.size());
  const double* xv = x.values().data();
  Eigen::Index oi = 0;
  for (int bi = 0; bi < batch; ++bi) {
    for (int ci = 0; ci < c; ++ci) {
      const std::ptrdiff_t base = (static_cast<std::ptrdiff_t>(bi) * c + ci) * h * w;
      for (int yo = 0; yo < ho; ++yo) {
        for (int xo = 0; xo < wo; ++xo) {
          // window positions in row-major scan order; strict > keeps the first max
          Eigen::Index best = base + (2 * yo) * w + 2 * xo;
          double bv = xv[best];
          const Eigen::Index cand[3] = {base + (2 * yo) * w + 2 * xo + 1,
                                        base + (2 * yo + 1) * w + 2 * xo,
                                        base + (2 * yo + 1) * w + 2 * xo + 1};
          for (Eigen::Index idx : cand) {
            if (xv[idx] > bv) {
              bv = xv[idx];
              best = idx;
            }
          }
          y[oi] = bv;
          (*argmax)[oi] = best;
          ++oi;
        }
      }
    }
  }

  auto xn = x.node();
  return make_op("maxpool2", {batch, c, ho, wo}, std::move(y), {x}, [=](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (Eigen::Index i = 0; i < self.grad.size(); ++i) xn->grad[(*argmax)[i]] += self.grad[i];
  });
}

Tensor relu(const Tensor& x) {
  Array y = x.values().max(0.0);
  auto xn = x.node();
  return make_op("relu", x.shape(), std::move(y), {x}, [=](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    xn->grad += self.grad * (xn->value > 0.0).cast<double>();
  });
}

Tensor softmax_ce(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw ValidationError("softmax_ce: expected rank 2 logits, got " + shape_str(logits.shape()));
  const int batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<int>(labels.size()) != batch)
    throw ValidationError("softmax_ce: " + std::to_string(labels.size()) + " labels for batch " +
                          std::to_string(batch));
  for (int i = 0; i < batch; ++i)
    if (labels[i] < 0 || labels[i] >= classes)
      throw ValidationError("softmax_ce: label " + std::to_string(labels[i]) + " at row " +
                            std::to_string(i) + " outside [0," + std::to_string(classes) + ")");

  auto probs = std::make_shared<RowMat>(batch, classes);
  MapConstMat lm(logits.values().data(), batch, classes);
  double loss = 0.0;
  for (int i = 0; i < batch; ++i) {
    double mx = lm.row(i).maxCoeff();
    Eigen::ArrayXd z = lm.row(i).array() - mx;
    Eigen::ArrayXd e = z.exp();
    double denom = e.sum();
    probs->row(i) = (e / denom).matrix();
    loss += std::log(denom) - z[labels[i]];
  }
  loss /= batch;

  auto ln = logits.node();
  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  Array y(1);
  y[0] = loss;
  return make_op("softmax_ce", {1}, std::move(y), {logits}, [=](Node& self) {
    if (!ln->requires_grad) return;
    ln->ensure_grad();
    const double g = self.grad[0] / batch;
    MapMat dl(ln->grad.data(), batch, classes);
    for (int i = 0; i < batch; ++i) {
      dl.row(i) += g * probs->row(i);
      dl(i, (*labels_copy)[i]) -= g;
    }
  });
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  if (shape_numel(shape) != x.size())
    throw ValidationError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  auto xn = x.node();
  return make_op("reshape", std::move(shape), x.values(), {x}, [=](Node& self) {
    accumulate(xn, self.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ValidationError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto an = a.node(), bn = b.node();
  return make_op("add", a.shape(), a.values() + b.values(), {a, b}, [=](Node& self) {
    if (an->requires_grad) accumulate(an, self.grad);
    if (bn->requires_grad) accumulate(bn, self.grad);
  });
}

Tensor scale(const Tensor& x, double c) {
  auto xn = x.node();
  return make_op("scale", x.shape(), x.values() * c, {x}, [=](Node& self) {
    if (xn->requires_grad) accumulate(xn, Array(self.grad * c));
  });
}

Tensor sum(const Tensor& x) {
  Array y(1);
  y[0] = x.values().sum();
  auto xn = x.node();
  return make_op("sum", {1}, std::move(y), {x}, [=](Node& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    xn->grad += self.grad[0];
  });
}

}  // namespace emolign::numgrad
