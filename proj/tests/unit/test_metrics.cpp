#include <doctest.h>

#include <cmath>
#include <random>

#include "mtr/eval/metrics.hpp"
#include "oracles.hpp"

using namespace mtr;
using namespace mtr::eval;

namespace {

ImageTensor permute_channels(const ImageTensor& img) {
  ImageTensor out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, (c + 1) % 3);
  return out;
}

}  // namespace

TEST_CASE("psnr fixtures") {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_image(16, 16, 3, rng);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0);
  CHECK(psnr(ImageTensor(8, 8, 3, 0.0f), ImageTensor(8, 8, 3, 1.0f)) == 0.0);
  // 0.5 and 0.625 are exact in binary; diff 0.125 gives 10 log10(64).
  CHECK(psnr(ImageTensor(8, 8, 3, 0.5f), ImageTensor(8, 8, 3, 0.625f)) ==
        doctest::Approx(10.0 * std::log10(64.0)).epsilon(1e-12));
  // Diff 0.1 (float-rounded) gives 20 dB up to float representation error.
  CHECK(std::abs(psnr(ImageTensor(8, 8, 3, 0.0f), ImageTensor(8, 8, 3, 0.1f)) - 20.0) < 1e-5);
  CHECK_THROWS_AS(psnr(a, ImageTensor(16, 15, 3)), InvalidArgument);
}

TEST_CASE("psnr and ssim are symmetric and channel-permutation invariant") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const auto a = oracle::random_image(20, 24, 3, rng);
    const auto b = oracle::random_image(20, 24, 3, rng);
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    CHECK(psnr(permute_channels(a), permute_channels(b)) == doctest::Approx(psnr(a, b)).epsilon(1e-12));
    CHECK(ssim(permute_channels(a), permute_channels(b)) == doctest::Approx(ssim(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("ssim fixtures") {
  std::mt19937_64 rng(3);
  const auto a = oracle::random_image(64, 64, 3, rng);
  CHECK(std::abs(ssim(a, a) - 1.0) < 1e-12);
  const auto b = oracle::random_image(64, 64, 3, rng);
  CHECK(std::abs(ssim(a, b)) < 0.1);
  CHECK_THROWS_AS(ssim(ImageTensor(10, 30, 3), ImageTensor(10, 30, 3)), InvalidArgument);
}

TEST_CASE("ssim matches the window-by-window reference") {
  std::mt19937_64 rng(4);
  auto a = oracle::random_image(24, 29, 3, rng);
  for (auto& v : a.data()) v *= 0.9f;
  ImageTensor shifted = a;
  for (auto& v : shifted.data()) v += 0.05f;
  CHECK(std::abs(ssim(a, shifted) - oracle::ssim_direct(a, shifted)) < 1e-6);
  for (int i = 0; i < 3; ++i) {
    const auto x = oracle::random_image(15, 18, 3, rng);
    const auto y = oracle::random_image(15, 18, 3, rng);
    CHECK(std::abs(ssim(x, y) - oracle::ssim_direct(x, y)) < 1e-6);
  }
}

TEST_CASE("mse/mae percentages") {
  const ImageTensor zero(10, 10, 1, 0.0f);
  const auto same = mse_mae_pct(zero, zero);
  CHECK(same.mse_pct == 0.0);
  CHECK(same.mae_pct == 0.0);
  const auto off = mse_mae_pct(ImageTensor(8, 8, 3, 0.5f), ImageTensor(8, 8, 3, 0.6f));
  CHECK(off.mse_pct == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(off.mae_pct == doctest::Approx(10.0).epsilon(1e-5));
  ImageTensor one_off = zero;
  one_off.at(3, 7, 0) = 1.0f;
  const auto single = mse_mae_pct(zero, one_off);
  CHECK(single.mse_pct == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(single.mae_pct == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(5);
  std::bernoulli_distribution perturb(0.5);
  for (int i = 0; i < 40; ++i) {
    const auto a = oracle::random_image(6, 6, 3, rng);
    auto b = a;
    if (perturb(rng)) b.at(i % 6, (i / 6) % 6, i % 3) += 1e-3f;
    CHECK((mse_mae_pct(a, b).mse_pct == 0.0) == (a == b));
  }
}

TEST_CASE("mask precision/recall/f1") {
  MaskTensor gt(1, 8, std::vector<float>{1, 1, 1, 1, 0, 0, 0, 0});
  const auto same = mask_prf(gt, gt);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  const auto inverted = mask_prf(gt.complement(), gt);
  CHECK(inverted.precision == 0.0);
  CHECK(inverted.recall == 0.0);
  CHECK(inverted.f1 == 0.0);
  const MaskTensor half(1, 8, std::vector<float>{1, 1, 0, 0, 1, 1, 0, 0});
  const auto h = mask_prf(half, gt);
  CHECK(h.precision == 0.5);
  CHECK(h.recall == 0.5);
  CHECK(h.f1 == 0.5);

  const MaskTensor empty(1, 8, 0.0f);
  const auto both_empty = mask_prf(empty, empty);
  CHECK(both_empty.precision == 1.0);
  CHECK(both_empty.recall == 1.0);
  CHECK(mask_prf(empty, gt).precision == 0.0);
  CHECK(mask_prf(empty, gt).recall == 0.0);
  CHECK(mask_prf(gt, empty).precision == 0.0);
  CHECK(mask_prf(gt, empty).recall == 1.0);
  CHECK_THROWS_AS(mask_prf(gt, MaskTensor(2, 4)), InvalidArgument);
}

TEST_CASE("raising the threshold never increases recall") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    MaskTensor pred(8, 8);
    for (auto& v : pred.data()) v = u(rng);
    const auto gt = oracle::random_mask(8, 8, 0.3, rng);
    double prev = 2.0;
    for (float t = 0.0f; t <= 1.0f; t += 0.05f) {
      const double r = mask_prf(pred, gt, t).recall;
      CHECK(r <= prev);
      prev = r;
    }
  }
}
