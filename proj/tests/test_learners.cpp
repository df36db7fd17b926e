#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "cogspeech/learners.hpp"
#include "cogspeech/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cogspeech;

namespace {

// two well-separated 2-D blobs, 20 points
std::pair<Matrix, std::vector<int>> separable_blobs(std::uint64_t seed) {
    Rng rng(seed);
    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        x.push_back({rng.normal(-2.0, 0.3), rng.normal(-2.0, 0.3)});
        y.push_back(0);
        x.push_back({rng.normal(2.0, 0.3), rng.normal(2.0, 0.3)});
        y.push_back(1);
    }
    return {x, y};
}

double train_accuracy(const ClassifierHead& head, const Matrix& x, const std::vector<int>& y) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (head.predict(x[i]).label == y[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("head fits separable data", "[learners]") {
    const auto [x, y] = separable_blobs(17);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.hidden = 8;
    cfg.seed = 3;
    const ClassifierHead head = train_classifier_head(x, y, 2, cfg);
    CHECK(train_accuracy(head, x, y) == 1.0);
    CHECK(std::isfinite(head.final_loss()));
}

TEST_CASE("head training is bit-reproducible", "[learners]") {
    const auto [x, y] = separable_blobs(21);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.hidden = 16;
    cfg.seed = 1234;
    const ClassifierHead a = train_classifier_head(x, y, 2, cfg);
    const ClassifierHead b = train_classifier_head(x, y, 2, cfg);
    REQUIRE(a.params() == b.params());  // exact, not approximate

    cfg.seed = 1235;
    const ClassifierHead c = train_classifier_head(x, y, 2, cfg);
    CHECK(a.params() != c.params());
}

TEST_CASE("head rejects degenerate inputs", "[learners]") {
    const auto [x, y] = separable_blobs(5);
    TrainConfig cfg;
    SECTION("single-class labels") {
        std::vector<int> ones(y.size(), 1);
        REQUIRE_THROWS_AS(train_classifier_head(x, ones, 2, cfg), TrainError);
    }
    SECTION("NaN features") {
        Matrix bad = x;
        bad[3][1] = std::nan("");
        REQUIRE_THROWS_AS(train_classifier_head(bad, y, 2, cfg), TrainError);
    }
    SECTION("dim mismatch at predict") {
        const ClassifierHead head = train_classifier_head(x, y, 2, cfg);
        REQUIRE_THROWS_AS(head.predict(std::vector<double>{1.0, 2.0, 3.0}), DataError);
    }
    SECTION("untrained predict") {
        ClassifierHead head(2, 4, 2, 0.0, 0);
        REQUIRE_THROWS_AS(head.predict(std::vector<double>{1.0, 2.0}), TrainError);
    }
}

TEST_CASE("softmax behavior at the decision boundary", "[learners]") {
    const auto p = ClassifierHead::softmax(std::vector<double>{3.0, 3.0});
    CHECK(p[0] == Catch::Approx(0.5));
    // argmax tie resolves to index 0
    CHECK(std::max_element(p.begin(), p.end()) - p.begin() == 0);

    const auto q = ClassifierHead::softmax(std::vector<double>{5.0, -5.0});
    CHECK(q[0] > 0.99);

    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(static_cast<std::size_t>(rng.uniform_int(2, 6)));
        for (auto& v : logits) v = rng.uniform(-30, 30);
        const auto probs = ClassifierHead::softmax(logits);
        double sum = 0;
        for (double v : probs) sum += v;
        REQUIRE(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("dropout is inference-invariant", "[learners]") {
    const auto [x, y] = separable_blobs(33);
    TrainConfig a;
    a.epochs = 30;
    a.seed = 7;
    a.dropout = 0.0;
    TrainConfig b = a;
    b.dropout = 0.5;
    const ClassifierHead head_a = train_classifier_head(x, y, 2, a);
    const ClassifierHead head_b = train_classifier_head(x, y, 2, b);
    // different training trajectories, but prediction is deterministic per model
    const auto p1 = head_b.predict(x[0]);
    const auto p2 = head_b.predict(x[0]);
    CHECK(p1.probs == p2.probs);
    CHECK(head_a.predict(x[0]).probs != head_b.predict(x[0]).probs);
}

TEST_CASE("analytic gradient matches central differences", "[learners]") {
    Rng rng(555);
    const std::size_t in_dim = 5, hidden = 4, n = 6;
    for (int point = 0; point < 10; ++point) {
        Matrix x(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i].resize(in_dim);
            for (auto& v : x[i]) v = rng.uniform(-2, 2);
            y[i] = static_cast<int>(rng.uniform_int(0, 1));
        }
        ClassifierHead head(in_dim, hidden, 2, 0.0, rng.next_u64());
        for (auto& p : head.params()) p = rng.uniform(-1, 1);

        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        std::vector<double> analytic;
        head.loss_and_grad(x, y, rows, {}, &analytic);

        const auto loss_fn = [&] { return head.loss_and_grad(x, y, rows, {}, nullptr); };
        const auto numeric = oracle::central_difference(loss_fn, head.params(), 1e-5);

        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
            CAPTURE(point, i, analytic[i], numeric[i]);
            REQUIRE(std::abs(analytic[i] - numeric[i]) / denom < 1e-4);
        }
    }
}

TEST_CASE("svr fits noise-free line within the tube", "[learners]") {
    Matrix x;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        const double xi = -2.0 + 4.0 * i / 39.0;
        x.push_back({xi});
        y.push_back(2.0 * xi + 1.0);
    }
    SvrConfig cfg;
    cfg.epsilon = 0.1;
    const LinearSvr model = train_svr(x, y, cfg);
    double max_residual = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        max_residual = std::max(max_residual, std::abs(model.predict(x[i]) - y[i]));
    CHECK(max_residual <= cfg.epsilon);
    CHECK(model.converged());
}

TEST_CASE("svr degenerate wide tube has zero loss", "[learners]") {
    Matrix x = {{0.0}, {1.0}, {2.0}};
    std::vector<double> y = {10.0, 10.4, 10.2};
    SvrConfig cfg;
    cfg.epsilon = 5.0;  // wider than the target range
    const LinearSvr model = train_svr(x, y, cfg);
    CHECK(model.objective() < 1e-9);
    double w_norm = 0;
    for (double w : model.weights()) w_norm += w * w;
    CHECK(w_norm < 1e-6);
}

TEST_CASE("svr training is deterministic", "[learners]") {
    Matrix x;
    std::vector<double> y;
    Rng rng(2);
    for (int i = 0; i < 25; ++i) {
        x.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3)});
        y.push_back(1.5 * x.back()[0] - 0.5 * x.back()[1] + rng.normal(0, 0.2));
    }
    SvrConfig cfg;
    const LinearSvr a = train_svr(x, y, cfg);
    const LinearSvr b = train_svr(x, y, cfg);
    CHECK(a.weights() == b.weights());
    CHECK(a.bias() == b.bias());
}

TEST_CASE("svr rejects NaN", "[learners]") {
    Matrix x = {{0.0}, {std::nan("")}};
    std::vector<double> y = {0.0, 1.0};
    REQUIRE_THROWS_AS(train_svr(x, y, SvrConfig{}), TrainError);
}

TEST_CASE("gbrt base score with zero rounds", "[learners]") {
    Matrix x = {{0.0}, {1.0}, {2.0}, {3.0}};
    std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
    GbrtConfig cfg;
    cfg.rounds = 0;
    const Gbrt model = train_gbrt(x, y, cfg);
    CHECK(model.predict(std::vector<double>{0.0}) == Catch::Approx(3.0));
    CHECK(model.predict(std::vector<double>{99.0}) == Catch::Approx(3.0));
}

TEST_CASE("gbrt stump nails a step function", "[learners]") {
    Matrix x;
    std::vector<double> y;
    for (int i = 0; i < 30; ++i) {
        const double xi = -1.0 + 2.0 * i / 29.0;
        x.push_back({xi});
        y.push_back(xi < 0 ? 0.0 : 1.0);
    }
    GbrtConfig cfg;
    cfg.depth = 1;
    cfg.rounds = 10;
    cfg.shrinkage = 1.0;
    const Gbrt model = train_gbrt(x, y, cfg);
    CHECK(model.rmse_history().back() < 1e-6);
}

TEST_CASE("gbrt training RMSE is monotone non-increasing", "[learners]") {
    Rng rng(44);
    for (int dataset = 0; dataset < 5; ++dataset) {
        Matrix x;
        std::vector<double> y;
        const std::size_t n = 40;
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
            y.push_back(std::sin(x.back()[0]) + 0.5 * x.back()[1] + rng.normal(0, 0.3));
        }
        GbrtConfig cfg;
        cfg.rounds = 50;
        cfg.depth = 2;
        const Gbrt model = train_gbrt(x, y, cfg);
        const auto& hist = model.rmse_history();
        REQUIRE(hist.size() == 51);
        for (std::size_t r = 1; r < hist.size(); ++r) {
            CAPTURE(dataset, r);
            REQUIRE(hist[r] <= hist[r - 1] + 1e-12);
        }
    }
}

TEST_CASE("gbrt prediction decomposes as base plus shrunk tree sum", "[learners]") {
    Matrix x = {{0.0}, {0.5}, {1.0}, {1.5}, {2.0}, {2.5}};
    std::vector<double> y = {0.0, 1.0, 4.0, 9.0, 16.0, 25.0};
    GbrtConfig cfg;
    cfg.rounds = 12;
    cfg.depth = 2;
    const Gbrt model = train_gbrt(x, y, cfg);
    const std::vector<double> probe = {1.25};
    double manual = model.base_score();
    for (const auto& tree : model.trees()) manual += model.shrinkage() * tree_predict(tree, probe);
    CHECK(model.predict(probe) == Catch::Approx(manual).epsilon(1e-12));
}

TEST_CASE("grid search returns the planted exact-fit point", "[learners]") {
    // quadratic data: depth-2 trees with enough rounds fit far better than
    // a 0-round configuration
    Matrix x;
    std::vector<double> y;
    for (int i = 0; i < 24; ++i) {
        const double xi = i / 4.0;
        x.push_back({xi});
        y.push_back(xi * xi);
    }
    struct Hp {
        int rounds;
    };
    const std::vector<Hp> grid = {{0}, {60}};
    const auto trainer = [&](const Matrix& xt, const std::vector<double>& yt, const Hp& hp) {
        GbrtConfig cfg;
        cfg.rounds = hp.rounds;
        cfg.depth = 2;
        cfg.shrinkage = 0.5;
        return train_gbrt(xt, yt, cfg);
    };
    const auto result = grid_search_cv(trainer, grid, x, y, 4, 9);
    CHECK(result.best_index == 1);
    CHECK(result.mean_rmse[1] < result.mean_rmse[0]);

    SECTION("single-point grid returns that point") {
        const std::vector<Hp> one = {{7}};
        CHECK(grid_search_cv(trainer, one, x, y, 4, 9).best_index == 0);
    }
    SECTION("same seed, same folds, same winner") {
        const auto again = grid_search_cv(trainer, grid, x, y, 4, 9);
        CHECK(again.best_index == result.best_index);
        CHECK(again.mean_rmse == result.mean_rmse);
    }
    SECTION("empty grid rejected") {
        REQUIRE_THROWS_AS(grid_search_cv(trainer, std::vector<Hp>{}, x, y, 4, 9), ConfigError);
    }
}

TEST_CASE("fold assignment is balanced and seed-stable", "[learners]") {
    const auto fa = make_folds(22, 4, 123);
    std::vector<int> counts(4, 0);
    for (const int f : fa.fold_of) counts[static_cast<std::size_t>(f)]++;
    for (const int c : counts) CHECK((c == 5 || c == 6));
    CHECK(make_folds(22, 4, 123).fold_of == fa.fold_of);
    CHECK(make_folds(22, 4, 124).fold_of != fa.fold_of);
}

TEST_CASE("model artifacts reload exactly", "[learners]") {
    testutil::TempDir dir("models");
    const auto [x, y] = separable_blobs(3);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.hidden = 8;
    const ClassifierHead head = train_classifier_head(x, y, 2, cfg);
    save_model(to_json(head, cfg), dir.file("head.json"));
    const ClassifierHead head2 = classifier_head_from_json(load_model(dir.file("head.json")));
    REQUIRE(head2.params() == head.params());
    CHECK(head2.predict(x[0]).probs == head.predict(x[0]).probs);

    std::vector<double> yr;
    for (const auto& row : x) yr.push_back(row[0] * 3 - row[1]);
    const LinearSvr svr = train_svr(x, yr, SvrConfig{});
    save_model(to_json(svr), dir.file("svr.json"));
    const LinearSvr svr2 = linear_svr_from_json(load_model(dir.file("svr.json")));
    CHECK(svr2.weights() == svr.weights());
    CHECK(svr2.bias() == svr.bias());

    GbrtConfig gcfg;
    gcfg.rounds = 8;
    const Gbrt gbrt = train_gbrt(x, yr, gcfg);
    save_model(to_json(gbrt), dir.file("gbrt.json"));
    const Gbrt gbrt2 = gbrt_from_json(load_model(dir.file("gbrt.json")));
    CHECK(gbrt2.predict(x[1]) == gbrt.predict(x[1]));
}

TEST_CASE("standardizer round-trip", "[learners]") {
    Matrix x = {{1.0, 100.0}, {2.0, 200.0}, {3.0, 300.0}};
    const Standardizer s = Standardizer::fit(x);
    const Matrix z = s.apply(x);
    CHECK(z[0][0] == Catch::Approx(-std::sqrt(1.5)));
    CHECK(z[1][0] == Catch::Approx(0.0).margin(1e-12));
    // constant column keeps scale 1
    Matrix c = {{5.0}, {5.0}};
    const Standardizer sc = Standardizer::fit(c);
    CHECK(sc.apply(c)[0][0] == Catch::Approx(0.0).margin(1e-12));
}
