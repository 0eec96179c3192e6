#include <cmath>
#include <filesystem>

#include "dgib/io.hpp"
#include "dgib/model.hpp"
#include "dgib/selfcheck.hpp"
#include "doctest.h"

using namespace dgib;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.K = 3;
  cfg.d0 = 4;
  cfg.d1 = 3;
  cfg.d2 = 4;
  cfg.d3 = 6;
  cfg.d4 = 4;
  cfg.gin_hidden = 5;
  cfg.cls_hidden = 4;
  cfg.t_hops = 2;
  cfg.seed = 11;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("forward produces exactly K logits, gaussians and samples") {
    auto cfg = small_config();
    auto inst = random_instance(7, 3, 0.35, cfg.d0, cfg.d1, 5);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    Tape tape;
    auto fwd = model_forward(tape, state, ctx, Mode::train, 99);
    CHECK(fwd.ks.size() == 3);
    for (const auto& kf : fwd.ks) {
      CHECK(kf.logit.value().size() == 1);
      CHECK(kf.mu.value().cols() == cfg.d3);
      CHECK(kf.sigma.value().cols() == cfg.d3);
      CHECK((kf.sigma.value().array() > 0).all());
      CHECK(kf.z.value().cols() == cfg.d3);
      CHECK(kf.scores.value().rows() == static_cast<Eigen::Index>(ctx.eg.edges.size()));
    }
  }

  TEST_CASE("test mode is deterministic and ignores the seed") {
    auto cfg = small_config();
    auto inst = random_instance(7, 3, 0.35, cfg.d0, cfg.d1, 6);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    Tape t1, t2;
    auto f1 = model_forward(t1, state, ctx, Mode::test, 1);
    auto f2 = model_forward(t2, state, ctx, Mode::test, 999);
    for (int k = 0; k < cfg.K; ++k) {
      CHECK(f1.ks[static_cast<std::size_t>(k)].logit.value() ==
            f2.ks[static_cast<std::size_t>(k)].logit.value());
      // z = mu at test time
      CHECK(f1.ks[static_cast<std::size_t>(k)].z.value() ==
            f1.ks[static_cast<std::size_t>(k)].mu.value());
    }
  }

  TEST_CASE("full-chain gradients match finite differences on a small instance") {
    auto cfg = small_config();
    cfg.K = 2;
    auto inst = random_instance(6, 3, 0.4, cfg.d0, cfg.d1, 7);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    auto report = check_model_gradients(state, ctx, 1, cfg, 12345);
    INFO("worst parameter: ", report.worst_param);
    CHECK(report.max_rel_err < 1e-4);
    CHECK(report.checked > 100);
  }

  TEST_CASE("beta1 = beta2 = 0 gradients equal pure-CE gradients") {
    auto cfg = small_config();
    cfg.K = 2;
    auto inst = random_instance(6, 3, 0.4, cfg.d0, cfg.d1, 8);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);

    auto grads_with = [&](double b1, double b2) {
      RunConfig c2 = cfg;
      c2.beta1 = b1;
      c2.beta2 = b2;
      Tape tape;
      auto fwd = model_forward(tape, state, ctx, Mode::train, 777);
      auto loss = attach_loss(tape, fwd, 1, c2);
      return backward_pair(tape, fwd, loss, ctx);
    };
    auto zeroed = grads_with(0.0, 0.0);

    // the pure-CE objective: rebuild with only the ce node
    Tape tape;
    auto fwd = model_forward(tape, state, ctx, Mode::train, 777);
    RunConfig c3 = cfg;
    c3.beta1 = 0.0;
    c3.beta2 = 0.0;
    auto loss = attach_loss(tape, fwd, 1, c3);
    tape.backward(loss.ce);
    for (std::size_t p = 1; p < fwd.params.size(); ++p) {
      CHECK(fwd.params[p].grad().isApprox(zeroed.params[p], 1e-12));
    }
  }

  TEST_CASE("sgd arithmetic and fixed point") {
    auto cfg = small_config();
    auto inst = random_instance(5, 2, 0.3, cfg.d0, cfg.d1, 9);
    auto state = init_model(inst.graph, cfg);
    GradAccumulator acc;
    acc.init_like(state);
    // p = 1, g = 2, lr = 0.005 -> 0.99
    state.classifier.b2(0, 0) = 1.0;
    auto reg = param_registry(state);
    for (std::size_t i = 1; i < reg.size(); ++i) {
      if (reg[i].name == "cls.b2") acc.params[i](0, 0) = 2.0;
    }
    ModelState before = state;
    sgd_step(state, acc, 0.005);
    CHECK(state.classifier.b2(0, 0) == doctest::Approx(0.99).epsilon(1e-15));

    // zero gradient leaves everything unchanged
    GradAccumulator zero;
    zero.init_like(state);
    ModelState copy = state;
    sgd_step(state, zero, 0.01);
    auto r1 = param_registry(state);
    auto r2 = param_registry(copy);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(*r1[i].mat == *r2[i].mat);

    // two half-steps on a constant gradient equal one full step
    ModelState a = before, b = before;
    sgd_step(a, acc, 0.005);
    sgd_step(b, acc, 0.0025);
    sgd_step(b, acc, 0.0025);
    CHECK(a.classifier.b2(0, 0) == doctest::Approx(b.classifier.b2(0, 0)).epsilon(1e-15));
  }

  TEST_CASE("non-finite gradients abort with the parameter name") {
    auto cfg = small_config();
    auto inst = random_instance(5, 2, 0.3, cfg.d0, cfg.d1, 10);
    auto state = init_model(inst.graph, cfg);
    GradAccumulator acc;
    acc.init_like(state);
    acc.params[2](0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
      sgd_step(state, acc, 0.01);
      FAIL("expected numeric error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::numeric);
      CHECK(std::string(e.what()).find("gate0") != std::string::npos);
    }
  }

  TEST_CASE("same seed twice gives identical trained parameters") {
    auto cfg = small_config();
    cfg.epochs = 2;
    cfg.batch = 4;
    auto inst = random_instance(9, 3, 0.3, cfg.d0, cfg.d1, 12);
    std::vector<LabeledPair> pairs;
    for (EntityId u = 0; u < 6; ++u) {
      for (EntityId v = static_cast<EntityId>(u + 1); v < 7; ++v) {
        pairs.push_back({u, v, (u + v) % 2});
      }
    }
    auto out1 = train_model(inst.graph, pairs, {}, cfg);
    auto out2 = train_model(inst.graph, pairs, {}, cfg);
    auto r1 = param_registry(out1.state);
    auto r2 = param_registry(out2.state);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(*r1[i].mat == *r2[i].mat);
    REQUIRE(out1.log.size() == out2.log.size());
    for (std::size_t i = 0; i < out1.log.size(); ++i) {
      CHECK(out1.log[i].mean.total == out2.log[i].mean.total);
    }
  }

  TEST_CASE("checkpoint round trip is bit-exact and byte-identical") {
    auto cfg = small_config();
    cfg.epochs = 1;
    auto inst = random_instance(8, 3, 0.35, cfg.d0, cfg.d1, 13);
    std::vector<LabeledPair> pairs = {{0, 1, 1}, {2, 3, 0}, {0, 4, 1}, {1, 5, 0}};
    auto out = train_model(inst.graph, pairs, {}, cfg);

    auto path1 = temp_path("dgib_ckpt1.bin");
    auto path2 = temp_path("dgib_ckpt2.bin");
    save_checkpoint(out.state, path1);
    save_checkpoint(out.state, path2);
    CHECK(read_file(path1) == read_file(path2));

    auto loaded = load_checkpoint(path1);
    auto r1 = param_registry(out.state);
    auto r2 = param_registry(loaded);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(*r1[i].mat == *r2[i].mat);

    auto ctx = build_pair_context(inst.graph, {0, 2, 0}, cfg);
    double before = predict_ctx(out.state, ctx);
    double after = predict_ctx(loaded, ctx);
    CHECK(before == after);
    CHECK(loaded.entities.names == out.state.entities.names);
    CHECK(loaded.sl_pairs == out.state.sl_pairs);
  }

  TEST_CASE("predict: all-zero classifier gives 0.5; output always in [0,1]") {
    auto cfg = small_config();
    auto inst = random_instance(7, 3, 0.4, cfg.d0, cfg.d1, 14);
    auto state = init_model(inst.graph, cfg);
    state.classifier.w2.setZero();
    state.classifier.b2.setZero();
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    CHECK(predict_ctx(state, ctx) == doctest::Approx(0.5).epsilon(1e-12));

    auto state2 = init_model(inst.graph, cfg);
    double c = predict_ctx(state2, ctx);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }

  TEST_CASE("K = 1 prediction equals the single sigmoid") {
    auto cfg = small_config();
    cfg.K = 1;
    auto inst = random_instance(7, 3, 0.4, cfg.d0, cfg.d1, 15);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    Tape tape;
    auto fwd = model_forward(tape, state, ctx, Mode::test, 0);
    double expected = 1.0 / (1.0 + std::exp(-fwd.ks[0].logit.value()(0, 0)));
    CHECK(predict_ctx(state, ctx) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("explanations preserve support and report the gram determinant") {
    auto cfg = small_config();
    auto inst = random_instance(8, 3, 0.45, cfg.d0, cfg.d1, 16);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    auto res = explain_ctx(state, ctx);
    CHECK(res.per_k.size() == 3);
    for (const auto& pk : res.per_k) {
      CHECK(pk.scores.size() == static_cast<Eigen::Index>(ctx.eg.edges.size()));
      for (int idx : pk.kept_edges) {
        CHECK(idx >= 0);
        CHECK(idx < static_cast<int>(ctx.eg.edges.size()));
        CHECK(pk.scores[idx] > pk.threshold);
      }
    }
    CHECK(res.dpp >= 0.0);

    // forcing identical gate blocks collapses diversity to ~0
    auto state2 = state;
    for (int k = 1; k < cfg.K; ++k) {
      state2.gates[static_cast<std::size_t>(k)] = state2.gates[0];
    }
    auto res2 = explain_ctx(state2, ctx);
    CHECK(res2.dpp == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("ablations: attention gates and motifs-off keep the output contract") {
    auto cfg = small_config();
    cfg.gib_enabled = false;
    auto inst = random_instance(7, 3, 0.4, cfg.d0, cfg.d1, 17);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    Tape tape;
    auto fwd = model_forward(tape, state, ctx, Mode::train, 4);
    if (!ctx.eg.edges.empty()) {
      CHECK(fwd.ks[0].gates.value().sum() == doctest::Approx(1.0).epsilon(1e-9));
    }

    RunConfig cfg2 = small_config();
    cfg2.motifs_enabled = false;
    auto state2 = init_model(inst.graph, cfg2);
    CHECK(state2.encoder.gins.size() == 1);
    auto ctx2 = build_pair_context(inst.graph, inst.pair, cfg2);
    Tape tape2;
    auto fwd2 = model_forward(tape2, state2, ctx2, Mode::test, 0);
    CHECK(fwd2.ks[0].mu.value().cols() == cfg2.d3);

    auto report = check_model_gradients(state2, ctx2, 1, cfg2, 555);
    CHECK(report.max_rel_err < 1e-4);
  }

  TEST_CASE("setting all gates to one makes encode depend on topology only") {
    auto cfg = small_config();
    cfg.K = 1;
    auto inst = random_instance(7, 3, 0.45, cfg.d0, cfg.d1, 18);
    auto state = init_model(inst.graph, cfg);
    auto ctx = build_pair_context(inst.graph, inst.pair, cfg);
    auto m = static_cast<Eigen::Index>(ctx.eg.edges.size());
    REQUIRE(m > 0);
    double c1 = predict_with_gates(state, ctx, 1, Vec::Ones(m));
    // a second state sharing encoder/classifier but different gate blocks
    auto state2 = state;
    state2.gates[0].w_node.array() += 0.3;
    double c2 = predict_with_gates(state2, ctx, 1, Vec::Ones(m));
    CHECK(c1 == doctest::Approx(c2).epsilon(1e-12));
  }

  TEST_CASE("rebuild_joint_graph restores the training topology") {
    auto cfg = small_config();
    TripleSet kg;
    EntityId a = kg.entities.intern("a"), b = kg.entities.intern("b"), c = kg.entities.intern("c");
    RelationId r = kg.relations.intern("r");
    kg.triples = {{a, r, b}, {b, r, c}, {a, r, c}};
    kg.kg_entity_count = 3;
    std::vector<LabeledPair> sl = {{a, c, 1}};
    auto g = build_joint_graph(kg, sl, cfg.d0, cfg.d1, cfg.seed);
    auto state = init_model(g, cfg);

    auto kg_path = temp_path("dgib_rebuild_kg.tsv");
    write_file_atomic(kg_path, "a\tr\tb\nb\tr\tc\na\tr\tc\n");
    auto rebuilt = rebuild_joint_graph(state, kg_path);
    CHECK(rebuilt.edge_count == g.edge_count);
    CHECK(rebuilt.sl_pairs == g.sl_pairs);
    CHECK(rebuilt.node_features == state.node_features);

    write_file_atomic(kg_path, "a\tr\tunknown_entity\n");
    CHECK_THROWS_AS(rebuild_joint_graph(state, kg_path), Error);
  }
}
