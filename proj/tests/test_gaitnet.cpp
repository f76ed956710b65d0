#include <doctest.h>

#include "gaitreid/gaitnet.hpp"
#include "gradcheck.hpp"

using namespace gaitreid;

namespace {

GaitNet::Options tiny_options(int scales = 3, int strip_dim = 5) {
  GaitNet::Options opt;
  opt.channels = {2, 3, 4};
  opt.scales = scales;
  opt.strip_dim = strip_dim;
  return opt;
}

Tensor random_seq(Rng& rng, int bsz, int frames) {
  Tensor t({bsz, frames, 64, 64});
  for (long i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}

}  // namespace

TEST_CASE("set_pool is the elementwise max and permutation-invariant") {
  Rng rng(1);
  std::vector<Tensor> frames;
  for (int f = 0; f < 5; ++f) {
    Tensor t({3, 4, 4});
    for (long i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    frames.push_back(std::move(t));
  }
  const Tensor pooled = set_pool(frames);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Tensor> shuffled = frames;
    rng.shuffle(shuffled);
    const Tensor again = set_pool(shuffled);
    CHECK(again.vec() == pooled.vec());  // bit-exact
  }

  // singleton set
  CHECK(set_pool({frames[2]}).vec() == frames[2].vec());

  // hand case: 0.2 vs 0.7 everywhere
  Tensor a({2, 2}), b({2, 2});
  a.fill(0.2);
  b.fill(0.7);
  const Tensor m = set_pool({a, b});
  for (long i = 0; i < m.numel(); ++i) CHECK(m[i] == 0.7);

  CHECK_THROWS_AS(set_pool({}), std::invalid_argument);
  Tensor wrong({3, 3});
  CHECK_THROWS_AS(set_pool({a, wrong}), std::invalid_argument);
}

TEST_CASE("set pooling is monotone in any single activation") {
  Rng rng(2);
  std::vector<Tensor> frames;
  for (int f = 0; f < 3; ++f) {
    Tensor t({2, 3, 3});
    for (long i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    frames.push_back(std::move(t));
  }
  const Tensor before = set_pool(frames);
  for (int trial = 0; trial < 50; ++trial) {
    auto bumped = frames;
    const int f = static_cast<int>(rng.uniform_int(3));
    const long i = static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(before.numel())));
    bumped[static_cast<std::size_t>(f)][i] += rng.uniform(0.0, 2.0);
    const Tensor after = set_pool(bumped);
    for (long j = 0; j < after.numel(); ++j) CHECK(after[j] >= before[j]);
  }
}

TEST_CASE("strip count follows the pyramid law for S in 1..6") {
  CHECK(hpm_strip_count(1) == 1);
  CHECK(hpm_strip_count(2) == 3);
  CHECK(hpm_strip_count(3) == 7);
  CHECK(hpm_strip_count(4) == 15);
  CHECK(hpm_strip_count(5) == 31);
  CHECK(hpm_strip_count(6) == 63);
  for (int s = 1; s <= 6; ++s) {
    GaitNet net(tiny_options(s, 3));
    CHECK(net.strip_count() == (1 << s) - 1);
  }
}

TEST_CASE("gait feature dimensions: S=5, d=64 gives g of length 1984") {
  GaitNet::Options opt;
  opt.channels = {2, 2, 3};
  opt.scales = 5;
  opt.strip_dim = 64;
  GaitNet net(opt);
  Rng rng(3);
  net.init(rng);
  Rng data(4);
  const Tensor seq = random_seq(data, 1, 2);
  const GaitNet::Out out = net.forward(seq);
  CHECK(out.strips.shape() == std::vector<int>{1, 31, 64});
  CHECK(out.g.shape() == std::vector<int>{1, 1984});
}

TEST_CASE("gait features are bit-identical under frame permutations") {
  GaitNet net(tiny_options());
  Rng rng(5);
  net.init(rng);
  Rng data(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int frames = 2 + static_cast<int>(data.uniform_int(5));
    const Tensor seq = random_seq(data, 1, frames);
    const Tensor base = net.forward(seq).g;
    for (int p = 0; p < 10; ++p) {
      std::vector<int> perm(static_cast<std::size_t>(frames));
      for (int i = 0; i < frames; ++i) perm[static_cast<std::size_t>(i)] = i;
      data.shuffle(perm);
      Tensor shuffled(seq.shape());
      const long plane = 64 * 64;
      for (int f = 0; f < frames; ++f)
        std::copy(seq.data() + perm[static_cast<std::size_t>(f)] * plane,
                  seq.data() + (perm[static_cast<std::size_t>(f)] + 1) * plane,
                  shuffled.data() + f * plane);
      const Tensor g = net.forward(shuffled).g;
      CHECK(g.vec() == base.vec());
    }
  }
}

TEST_CASE("a duplicated single frame behaves exactly like the singleton set") {
  GaitNet net(tiny_options());
  Rng rng(7);
  net.init(rng);
  Rng data(8);
  const Tensor one = random_seq(data, 1, 1);
  Tensor eight({1, 8, 64, 64});
  for (int f = 0; f < 8; ++f)
    std::copy(one.data(), one.data() + 64 * 64, eight.data() + f * 64 * 64);
  const Tensor g1 = net.forward(one).g;
  const Tensor g8 = net.forward(eight).g;
  CHECK(g1.vec() == g8.vec());
}

TEST_CASE("separate triplet loss hand cases") {
  // all embeddings identical: every triple contributes exactly the margin
  Tensor same({4, 2, 3});
  same.fill(0.5);
  const std::vector<int> labels{0, 0, 1, 1};
  CHECK(separate_triplet_loss(same, labels, 0.2, nullptr) == doctest::Approx(0.2));

  // classes separated by at least the margin in every strip: loss 0
  Tensor apart({4, 2, 3});
  for (int b = 0; b < 4; ++b)
    for (int s = 0; s < 2; ++s)
      for (int j = 0; j < 3; ++j) apart[(b * 2 + s) * 3 + j] = b < 2 ? 0.0 : 10.0;
  CHECK(separate_triplet_loss(apart, labels, 0.2, nullptr) == 0.0);

  // degenerate batches are rejected
  const std::vector<int> lonely{0, 1, 2, 3};
  CHECK_THROWS_AS(separate_triplet_loss(same, lonely, 0.2, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(separate_triplet_loss(same, labels, -0.1, nullptr), std::invalid_argument);
}

TEST_CASE("separate triplet loss gradient matches finite differences") {
  GaitNet net(tiny_options(2, 4));
  Rng rng(9);
  net.init(rng);
  Rng data(10);
  const Tensor seq = random_seq(data, 4, 2);
  const std::vector<int> labels{0, 0, 1, 1};
  auto params = net.params();
  auto loss_fn = [&]() {
    return separate_triplet_loss(net.forward(seq).strips, labels, 0.2, nullptr);
  };
  auto backward_fn = [&]() {
    nn::zero_grads(params);
    Tensor d;
    separate_triplet_loss(net.forward(seq).strips, labels, 0.2, &d);
    net.backward(d);
  };
  Rng pick(11);
  const double err = testing::max_grad_rel_err(params, loss_fn, backward_fn, pick, 20);
  CHECK(err < 1e-4);
}

TEST_CASE("gaitnet backward routes gradients to the input frames") {
  GaitNet net(tiny_options(2, 3));
  Rng rng(12);
  net.init(rng);
  Rng data(13);
  Tensor seq = random_seq(data, 2, 3);
  const GaitNet::Out out = net.forward(seq);
  Tensor d(out.strips.shape());
  for (long i = 0; i < d.numel(); ++i) d[i] = data.normal();
  const Tensor d_frames = net.backward(d);
  CHECK(d_frames.shape() == seq.shape());
  // finite-difference check through the input rather than the parameters
  Rng pick(14);
  auto loss = [&]() {
    const GaitNet::Out o = net.forward(seq);
    double s = 0.0;
    for (long i = 0; i < o.strips.numel(); ++i) s += o.strips[i] * d[i];
    return s;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const long i = static_cast<long>(pick.uniform_int(static_cast<std::uint64_t>(seq.numel())));
    const double saved = seq[i];
    const double eps = 1e-5;
    seq[i] = saved + eps;
    const double lp = loss();
    seq[i] = saved - eps;
    const double lm = loss();
    seq[i] = saved;
    const double fd = (lp - lm) / (2 * eps);
    const double err =
        std::abs(fd - d_frames[i]) / std::max({std::abs(fd), std::abs(d_frames[i]), 1e-5});
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-4);
}
