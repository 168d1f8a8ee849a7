/* Copyright 2026 The crnn-lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// End-to-end acceptance runs: one pass/fail line per criterion. Heavier than
// the unit suite; training sections run sequentially on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crnn/experiment.hpp"
#include "crnn/gradcheck_suite.hpp"

using namespace crnn;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  std::printf("[%d/8] %-24s %s  (%s; %.1fs)\n", index, name.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---- independent straight-line oracles (criterion 3) ------------------------

std::vector<double> fw_oracle(const std::vector<double>& x, const std::vector<double>& h,
                              std::vector<double>& a, const Tensor& w, const Tensor& c,
                              const Tensor& gain, const Tensor& bias, double lambda, double eta,
                              int steps, long E, long H) {
  for (long i = 0; i < H; ++i)
    for (long j = 0; j < H; ++j)
      a[static_cast<size_t>(i * H + j)] =
          lambda * a[static_cast<size_t>(i * H + j)] +
          eta * h[static_cast<size_t>(i)] * h[static_cast<size_t>(j)];
  std::vector<double> z(static_cast<size_t>(H), 0.0);
  for (long j = 0; j < H; ++j) {
    for (long i = 0; i < H; ++i) z[static_cast<size_t>(j)] += h[static_cast<size_t>(i)] * w.at(i, j);
    for (long i = 0; i < E; ++i) z[static_cast<size_t>(j)] += x[static_cast<size_t>(i)] * c.at(i, j);
  }
  std::vector<double> hs(static_cast<size_t>(H));
  for (long j = 0; j < H; ++j) hs[static_cast<size_t>(j)] = std::max(0.0, z[static_cast<size_t>(j)]);
  for (int s = 0; s < steps; ++s) {
    std::vector<double> pre(static_cast<size_t>(H));
    for (long j = 0; j < H; ++j) {
      double av = 0.0;
      for (long k = 0; k < H; ++k) av += a[static_cast<size_t>(j * H + k)] * hs[static_cast<size_t>(k)];
      pre[static_cast<size_t>(j)] = z[static_cast<size_t>(j)] + av;
    }
    double mean = 0.0;
    for (double v : pre) mean += v;
    mean /= static_cast<double>(H);
    double var = 0.0;
    for (double v : pre) var += (v - mean) * (v - mean);
    var /= static_cast<double>(H);
    double inv = 1.0 / std::sqrt(var + 1e-5);
    for (long j = 0; j < H; ++j) {
      double normed = (pre[static_cast<size_t>(j)] - mean) * inv * gain.data[static_cast<size_t>(j)] +
                      bias.data[static_cast<size_t>(j)];
      hs[static_cast<size_t>(j)] = std::max(0.0, normed);
    }
  }
  return hs;
}

bool check_fw_oracle(std::string& detail) {
  double worst = 0.0;
  Rng rng(7001);
  for (int trial = 0; trial < 100; ++trial) {
    long H = 2 + static_cast<long>(rng.uniform_int(5));
    long E = 1 + static_cast<long>(rng.uniform_int(4));
    int steps = 1 + static_cast<int>(rng.uniform_int(3));
    double lambda = rng.uniform(0.5, 0.99);
    double eta = rng.uniform(0.1, 0.9);
    Tensor w = rng.normal_tensor({H, H});
    Tensor c = rng.normal_tensor({E, H});
    Tensor gain = rng.normal_tensor({H}, 0.3);
    for (double& v : gain.data) v += 1.0;
    Tensor bias = rng.normal_tensor({H}, 0.3);
    Tensor x = rng.normal_tensor({1, E});
    Tensor h = rng.normal_tensor({1, H});
    Tensor a = rng.normal_tensor({1, H, H}, 0.2);

    Tape t;
    FwParamIds p{t.param(w), t.param(c), t.param(gain), t.param(bias), lambda, eta, steps};
    StateIds s{t.constant(h), -1, t.constant(a)};
    StateIds out = fw_step(t, t.constant(x), s, p);

    std::vector<double> av(a.data);
    std::vector<double> hv(h.data);
    std::vector<double> ref = fw_oracle(x.data, hv, av, w, c, gain, bias, lambda, eta, steps, E, H);
    for (long j = 0; j < H; ++j)
      worst = std::max(worst, std::abs(t.val(out.h).at(0, j) - ref[static_cast<size_t>(j)]));
    for (long i = 0; i < H * H; ++i)
      worst = std::max(worst, std::abs(t.val(out.a).data[static_cast<size_t>(i)] -
                                       av[static_cast<size_t>(i)]));
  }
  detail = "fw max abs diff " + fmt_double(worst);
  return worst < 1e-12;
}

bool check_adam_oracle(std::string& detail) {
  double worst = 0.0;
  Rng rng(7002);
  for (int trial = 0; trial < 100; ++trial) {
    long n = 1 + static_cast<long>(rng.uniform_int(6));
    long n_steps = 1 + static_cast<long>(rng.uniform_int(10));
    double lr = rng.uniform(1e-4, 0.1);

    ParamStore ps;
    ps.add("x", rng.normal_tensor({n}));
    std::vector<double> x = ps.value(0).data;
    Adam opt(lr);

    std::vector<double> m(static_cast<size_t>(n), 0.0), v(static_cast<size_t>(n), 0.0);
    for (long step = 1; step <= n_steps; ++step) {
      Tensor coeff = rng.normal_tensor({n});
      Tape t;
      std::vector<int> ids = ps.stage(t);
      GradMap g = t.backward(t.sum(t.mul(ids[0], t.constant(coeff))));
      opt.step(ps, ids, g);

      for (long i = 0; i < n; ++i) {
        double gi = coeff.data[static_cast<size_t>(i)];
        m[static_cast<size_t>(i)] = 0.9 * m[static_cast<size_t>(i)] + 0.1 * gi;
        v[static_cast<size_t>(i)] = 0.999 * v[static_cast<size_t>(i)] + 0.001 * gi * gi;
        double mh = m[static_cast<size_t>(i)] / (1.0 - std::pow(0.9, static_cast<double>(step)));
        double vh = v[static_cast<size_t>(i)] / (1.0 - std::pow(0.999, static_cast<double>(step)));
        x[static_cast<size_t>(i)] -= lr * mh / (std::sqrt(vh) + 1e-8);
      }
    }
    for (long i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(ps.value(0).data[static_cast<size_t>(i)] -
                                       x[static_cast<size_t>(i)]));
  }
  detail = "adam max abs diff " + fmt_double(worst);
  return worst < 1e-12;
}

// ---- training helpers --------------------------------------------------------

std::vector<double> valid_series(const std::vector<MetricsRecord>& metrics, bool art) {
  std::vector<double> out;
  for (const MetricsRecord& r : metrics)
    if (r.split == "valid") out.push_back(art ? r.log_likelihood : r.mse);
  return out;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

double mean_abs_error_of_mean_trajectory(const std::vector<std::vector<double>>& traj,
                                         const LcdConfig& truth) {
  size_t t_f = traj[0].size();
  double mae = 0.0;
  for (size_t t = 0; t < t_f; ++t) {
    double mean = 0.0;
    for (const auto& tr : traj) mean += tr[t];
    mean /= static_cast<double>(traj.size());
    mae += std::abs(mean - lcd_value(static_cast<double>(t), truth));
  }
  return mae / static_cast<double>(t_f);
}

}  // namespace

int main() {
  std::printf("acceptance suite (sequential, single core)\n");

  // 1. gradient integrity
  {
    double t0 = now_seconds();
    GradCheckReport r = full_gradient_suite(1e-4);
    double worst = 0.0;
    for (const auto& e : r.entries) worst = std::max(worst, e.max_rel_err);
    report(1, "gradient integrity", r.all_pass,
           std::to_string(r.entries.size()) + " checks, worst rel err " + fmt_double(worst),
           now_seconds() - t0);
  }

  // 2. decay curve analytics
  {
    double t0 = now_seconds();
    double worst = 0.0;
    LcdConfig a;
    a.x0 = 3.3;
    a.period = 2.5;
    worst = std::max(worst, std::abs(lcd_value(0.0, a) - 3.3 * 1.001));
    LcdConfig b;
    b.x0 = 2.7;
    b.period = 3.0;  // integer period: cosine envelope returns to 1 at t_f
    worst = std::max(worst, std::abs(lcd_value(25.0, b) - 2.7 * 0.001));
    LcdConfig c;
    c.x0 = 4.0;
    c.period = 4.0;
    worst = std::max(worst, std::abs(lcd_value(12.5, c) - 2.004));
    report(2, "decay closed form", worst < 1e-12, "max abs err " + fmt_double(worst),
           now_seconds() - t0);
  }

  // 3. oracle equivalence
  {
    double t0 = now_seconds();
    std::string d1, d2;
    bool fw_ok = check_fw_oracle(d1);
    bool adam_ok = check_adam_oracle(d2);
    report(3, "oracle equivalence", fw_ok && adam_ok, d1 + ", " + d2, now_seconds() - t0);
  }

  // shared desk-scale retrieval data (criteria 4 and 7)
  auto [art_train, art_valid] = gen_art_dataset(20000, 4000, 4, 1000);

  // 4. retrieval ordering: learned context state beats the zero baseline
  {
    double t0 = now_seconds();
    bool pass = true;
    std::string detail;
    for (uint64_t seed : {1u, 2u, 3u}) {
      TrainConfig tc;
      tc.seed = seed;
      tc.epochs = 50;
      tc.batch_size = 128;
      tc.lr = 0.001;
      // A narrow embedding keeps all 50 epochs inside the learning phase,
      // where the ordering claim lives. Wider embeddings put runs at the
      // task's sharp phase transition, whose timing is seed noise that
      // swamps the initialization effect either way.
      ArtModelConfig zero_cfg;
      zero_cfg.init = InitKind::kZero;
      zero_cfg.embedding_dim = 8;
      ArtModelConfig ctx_cfg;
      ctx_cfg.init = InitKind::kContextual;
      ctx_cfg.embedding_dim = 8;

      std::vector<double> ll_zero =
          valid_series(train_art(zero_cfg, tc, art_train, art_valid).metrics, true);
      std::vector<double> ll_ctx =
          valid_series(train_art(ctx_cfg, tc, art_train, art_valid).metrics, true);

      bool final_better = ll_ctx.back() > ll_zero.back();
      long wins = 0, considered = 0;
      for (size_t e = 10; e < ll_ctx.size(); ++e) {  // epochs 11..50
        ++considered;
        if (ll_ctx[e] > ll_zero[e]) ++wins;
      }
      bool epoch_share = wins * 5 >= considered * 4;  // >= 80%
      if (!(final_better && epoch_share)) pass = false;
      detail += "seed " + std::to_string(seed) + ": final " + fmt_double(ll_ctx.back()) + " vs " +
                fmt_double(ll_zero.back()) + ", wins " + std::to_string(wins) + "/" +
                std::to_string(considered) + "; ";
    }
    report(4, "retrieval ordering", pass, detail, now_seconds() - t0);
  }

  // shared full-scale decay data (criteria 5 and 6)
  auto lcd_train = gen_lcd_dataset({0.5, 1.5, 2.5, 3.5, 4.5}, 1000, 25, 2000);
  auto lcd_valid = gen_lcd_dataset({1.0, 2.0, 3.0, 4.0}, 500, 25, 2001);

  // 5. decay ordering: stochastic contextual beats zero for the median seed
  LcdModel trained_lcd;  // seed-1 stochastic model, reused by criterion 6
  bool have_trained_lcd = false;
  {
    double t0 = now_seconds();
    std::vector<double> final_zero, final_stoch;
    for (uint64_t seed : {1u, 2u, 3u}) {
      TrainConfig tc;
      tc.seed = seed;
      tc.epochs = 65;
      tc.batch_size = 128;
      tc.lr = 0.0002;
      tc.eval_every = 5;
      LcdModelConfig zero_cfg;
      zero_cfg.init = InitKind::kZero;
      LcdModelConfig stoch_cfg;
      stoch_cfg.init = InitKind::kContextualStochastic;

      LcdTrainOutput zo = train_lcd(zero_cfg, tc, lcd_train, lcd_valid);
      LcdTrainOutput so = train_lcd(stoch_cfg, tc, lcd_train, lcd_valid);
      final_zero.push_back(valid_series(zo.metrics, false).back());
      final_stoch.push_back(valid_series(so.metrics, false).back());
      if (seed == 1) {
        trained_lcd = std::move(so.model);
        have_trained_lcd = true;
      }
    }
    double med_zero = median3(final_zero);
    double med_stoch = median3(final_stoch);
    std::string per_seed;
    for (size_t i = 0; i < 3; ++i)
      per_seed += " s" + std::to_string(i + 1) + " " + fmt_double(final_stoch[i]) + "/" +
                  fmt_double(final_zero[i]);
    report(5, "decay ordering", med_stoch < med_zero,
           "median final mse " + fmt_double(med_stoch) + " (stochastic) vs " +
               fmt_double(med_zero) + " (zero);" + per_seed,
           now_seconds() - t0);
  }

  // 6. conditional generation from the trained checkpoint
  {
    double t0 = now_seconds();
    bool pass = have_trained_lcd;
    std::string detail;
    Rng init_rng = Rng::substream(99, 0);
    LcdModelConfig stoch_cfg;
    stoch_cfg.init = InitKind::kContextualStochastic;
    LcdModel untrained = LcdModel::create(stoch_cfg, init_rng);

    for (double period : {2.0, 3.0}) {
      double x0 = 3.0;
      Rng r1(500), r2(501);
      auto traj = trained_lcd.rollout(x0, period, 10, 25, r1);
      auto base = untrained.rollout(x0, period, 10, 25, r2);

      bool well_formed = traj.size() == 10;
      for (const auto& tr : traj)
        well_formed = well_formed && tr.size() == 25 && tr[0] == x0;
      for (size_t i = 0; i < traj.size() && well_formed; ++i)
        for (size_t j = i + 1; j < traj.size(); ++j)
          if (traj[i] == traj[j]) well_formed = false;

      LcdConfig truth;
      truth.x0 = x0;
      truth.period = period;
      double mae = mean_abs_error_of_mean_trajectory(traj, truth);
      double mae_untrained = mean_abs_error_of_mean_trajectory(base, truth);
      if (!(well_formed && mae < mae_untrained)) pass = false;
      detail += "T=" + fmt_double(period) + ": mae " + fmt_double(mae) + " vs untrained " +
                fmt_double(mae_untrained) + "; ";
    }
    report(6, "conditional generation", pass, detail, now_seconds() - t0);
  }

  // 7. chance-level sanity on the untrained retrieval model
  {
    double t0 = now_seconds();
    Rng init_rng = Rng::substream(123, 0);
    ArtModelConfig cfg;
    cfg.init = InitKind::kZero;
    ArtModel model = ArtModel::create(cfg, init_rng);
    MetricsRecord r = evaluate_art(model, art_valid);
    bool pass = r.accuracy >= 0.08 && r.accuracy <= 0.12 &&
                std::abs(r.log_likelihood + std::log(10.0)) <= 0.05;
    report(7, "chance-level sanity", pass,
           "accuracy " + fmt_double(r.accuracy) + ", log likelihood " + fmt_double(r.log_likelihood),
           now_seconds() - t0);
  }

  // 8. byte-for-byte metrics determinism through the run driver
  {
    double t0 = now_seconds();
    namespace fs = std::filesystem;
    fs::path root = "acceptance_tmp";
    fs::remove_all(root);
    fs::create_directories(root / "data");

    Config cfg;
    cfg.set("task", "art");
    cfg.set("seed", "12");
    cfg.set("data.k", "4");
    cfg.set("data.n_train", "600");
    cfg.set("data.n_valid", "200");
    run_gen_data(cfg, (root / "data").string());
    cfg.set("model.hidden", "20");
    cfg.set("model.embedding", "16");
    cfg.set("train.epochs", "2");
    cfg.set("train.batch_size", "64");
    cfg.set("init.strategy", "learned-distribution");
    cfg.set("data.train_path", (root / "data" / "art_train.txt").string());
    cfg.set("data.valid_path", (root / "data" / "art_valid.txt").string());
    run_train(cfg, (root / "run1").string());
    run_train(cfg, (root / "run2").string());
    std::string m1 = read_file((root / "run1" / "metrics.jsonl").string());
    std::string m2 = read_file((root / "run2" / "metrics.jsonl").string());
    bool pass = !m1.empty() && m1 == m2;
    report(8, "metrics determinism", pass,
           pass ? "metrics.jsonl byte-identical across runs" : "metrics.jsonl differ",
           now_seconds() - t0);
    fs::remove_all(root);
  }

  std::printf("acceptance: %s (%d failure%s)\n", g_failures == 0 ? "ALL PASS" : "FAILED",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
