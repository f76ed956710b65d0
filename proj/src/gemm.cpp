#include "gaitreid/nn.hpp"

#include <Eigen/Dense>

namespace gaitreid::nn {

namespace {
using MapM = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>,
                        0, Eigen::OuterStride<>>;
using MapMu = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0,
                         Eigen::OuterStride<>>;
}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc) {
  MapM ma(a, trans_a ? k : m, trans_a ? m : k, Eigen::OuterStride<>(lda));
  MapM mb(b, trans_b ? n : k, trans_b ? k : n, Eigen::OuterStride<>(ldb));
  MapMu mc(c, m, n, Eigen::OuterStride<>(ldc));

  if (beta == 0.0)
    mc.setZero();
  else if (beta != 1.0)
    mc *= beta;

  if (trans_a) {
    if (trans_b)
      mc.noalias() += alpha * (ma.transpose() * mb.transpose());
    else
      mc.noalias() += alpha * (ma.transpose() * mb);
  } else {
    if (trans_b)
      mc.noalias() += alpha * (ma * mb.transpose());
    else
      mc.noalias() += alpha * (ma * mb);
  }
}

}  // namespace gaitreid::nn
