#include "kpe/autograd.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace kpe;

namespace {

using Builder = std::function<ag::Var(ag::Graph&, std::vector<ag::Var>&)>;

// Scalar probe L * y * R with fixed random L, R, so every output entry gets
// a distinct weight.
double check_op(std::vector<Parameter>& inputs, const Builder& build, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix left, right;
    auto loss = [&](ag::Graph& g) {
        std::vector<ag::Var> vars;
        for (auto& p : inputs) vars.push_back(g.parameter(p));
        ag::Var y = build(g, vars);
        if (left.empty()) {
            left = test::random_matrix(1, y.rows(), rng);
            right = test::random_matrix(y.cols(), 1, rng);
        }
        return ag::matmul(ag::matmul(g.constant(left), y), g.constant(right));
    };
    ag::Graph g;
    ag::Var root = loss(g);
    g.backward(root);
    double worst = 0.0;
    for (auto& p : inputs) {
        const Matrix* grad = g.gradient(p);
        REQUIRE(grad != nullptr);
        const Matrix analytic = *grad;
        worst = std::max(worst, test::max_fd_error(p, analytic, [&] {
                             ag::Graph h;
                             return loss(h).scalar();
                         }));
    }
    return worst;
}

using Shapes = std::vector<std::pair<std::size_t, std::size_t>>;

std::vector<Parameter> params(std::mt19937_64& rng, const Shapes& shapes) {
    std::vector<Parameter> out;
    for (auto [r, c] : shapes) out.emplace_back(test::random_matrix(r, c, rng));
    return out;
}

}  // namespace

TEST_SUITE("autograd") {

TEST_CASE("every op matches central differences") {
    std::mt19937_64 rng(3);
    const std::vector<std::size_t> ids{2, 0, 2, 1};
    const std::vector<std::size_t> rows{1, 3};
    const std::vector<int> labels{0, 2, 1, 1};
    const std::vector<int> binary{1, 0, 0, 1};

    struct Case {
        const char* name;
        Shapes shapes;
        Builder build;
    };
    const std::vector<Case> cases = {
        {"matmul", {{3, 4}, {4, 2}}, [](ag::Graph&, auto& v) { return ag::matmul(v[0], v[1]); }},
        {"matmul_nt", {{3, 4}, {5, 4}}, [](ag::Graph&, auto& v) { return ag::matmul_nt(v[0], v[1]); }},
        {"add", {{3, 4}, {3, 4}}, [](ag::Graph&, auto& v) { return ag::add(v[0], v[1]); }},
        {"add_row", {{3, 4}, {1, 4}}, [](ag::Graph&, auto& v) { return ag::add_row(v[0], v[1]); }},
        {"scale", {{3, 4}}, [](ag::Graph&, auto& v) { return ag::scale(v[0], -1.7); }},
        {"gelu", {{3, 4}}, [](ag::Graph&, auto& v) { return ag::gelu(v[0]); }},
        {"sigmoid", {{3, 4}}, [](ag::Graph&, auto& v) { return ag::sigmoid(v[0]); }},
        {"softmax_rows", {{3, 4}}, [](ag::Graph&, auto& v) { return ag::softmax_rows(v[0]); }},
        {"layer_norm", {{3, 5}, {1, 5}, {1, 5}}, [](ag::Graph&, auto& v) { return ag::layer_norm(v[0], v[1], v[2]); }},
        {"gather_rows", {{3, 4}}, [&](ag::Graph&, auto& v) { return ag::gather_rows(v[0], ids); }},
        {"select_rows", {{4, 3}}, [&](ag::Graph&, auto& v) { return ag::select_rows(v[0], rows); }},
        {"slice_cols", {{3, 5}}, [](ag::Graph&, auto& v) { return ag::slice_cols(v[0], 1, 3); }},
        {"concat_cols",
         {{3, 2}, {3, 3}},
         [](ag::Graph&, auto& v) {
             std::vector<ag::Var> parts{v[0], v[1]};
             return ag::concat_cols(parts);
         }},
        {"max_pool_rows", {{4, 3}}, [](ag::Graph&, auto& v) { return ag::max_pool_rows(v[0]); }},
        {"sum", {{3, 4}}, [](ag::Graph&, auto& v) { return ag::sum(v[0]); }},
        {"label_nll",
         {{4, 3}},
         [&](ag::Graph&, auto& v) { return ag::label_nll(ag::softmax_rows(v[0]), labels, 1e-12); }},
        {"binary_nll",
         {{4, 1}},
         [&](ag::Graph&, auto& v) { return ag::binary_nll(ag::sigmoid(v[0]), binary, 1e-12); }},
    };
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CAPTURE(cases[i].name);
        auto inputs = params(rng, cases[i].shapes);
        CHECK(check_op(inputs, cases[i].build, 100 + i) <= 1e-6);
    }
}

TEST_CASE("parameters used twice accumulate both paths") {
    Parameter w(Matrix::from_rows({{2.0}}));
    ag::Graph g;
    ag::Var x = g.parameter(w);
    ag::Var y = ag::matmul(x, x);  // w^2
    g.backward(ag::add(y, x));     // d/dw = 2w + 1
    REQUIRE(g.gradient(w) != nullptr);
    CHECK((*g.gradient(w))(0, 0) == doctest::Approx(5.0));
}

TEST_CASE("unused parameters have no gradient and constants need none") {
    Parameter used(Matrix::from_rows({{1.0}})), unused(Matrix::from_rows({{1.0}}));
    ag::Graph g;
    ag::Var c = g.constant(Matrix::from_rows({{3.0}}));
    g.backward(ag::matmul(c, g.parameter(used)));
    CHECK(g.gradient(unused) == nullptr);
    CHECK((*g.gradient(used))(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("backward requires a scalar root") {
    ag::Graph g;
    ag::Var x = g.constant(Matrix(2, 2, 1.0));
    CHECK_THROWS(g.backward(x));
}

TEST_CASE("label_nll clamps zero probabilities") {
    ag::Graph g;
    ag::Var p = g.constant(Matrix::from_rows({{1.0, 0.0, 0.0}}));
    const std::vector<int> gold{1};
    CHECK(ag::label_nll(p, gold, 1e-12).scalar() == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("max_pool_rows routes the gradient to the first maximal row") {
    Parameter w(Matrix::from_rows({{1.0, 5.0}, {3.0, 5.0}}));
    ag::Graph g;
    g.backward(ag::sum(ag::max_pool_rows(g.parameter(w))));
    const Matrix& grad = *g.gradient(w);
    CHECK(grad == Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}));
}

}
