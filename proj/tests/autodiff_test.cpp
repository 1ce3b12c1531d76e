#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "evoga/adam.hpp"
#include "evoga/mlp.hpp"
#include "evoga/objectives.hpp"
#include "evoga/rng.hpp"
#include "evoga/tape.hpp"

using namespace evoga;

namespace {

// A scalar loss as a pure function of parameter tensors, rebuilt on a fresh
// tape per call so finite differences never touch recorded state.
using LossFn = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

double eval_loss(const LossFn& build, const std::vector<Mat>& params) {
    Tape tape;
    std::vector<NodeId> ids;
    for (const Mat& p : params) ids.push_back(tape.parameter(p));
    return tape.value(build(tape, ids))[0];
}

std::vector<Mat> analytic_grads(const LossFn& build, const std::vector<Mat>& params) {
    Tape tape;
    std::vector<NodeId> ids;
    for (const Mat& p : params) ids.push_back(tape.parameter(p));
    auto grads = tape.backward(build(tape, ids));
    std::vector<Mat> out;
    for (NodeId id : ids) out.push_back(grads.at(id));
    return out;
}

// Central finite differences per entry, relative error threshold `tol`.
void expect_fd_match(const LossFn& build, std::vector<Mat> params, double tol,
                     double step = 1e-5) {
    std::vector<Mat> grads = analytic_grads(build, params);
    for (size_t t = 0; t < params.size(); ++t) {
        for (size_t i = 0; i < params[t].size(); ++i) {
            double saved = params[t][i];
            params[t][i] = saved + step;
            double hi = eval_loss(build, params);
            params[t][i] = saved - step;
            double lo = eval_loss(build, params);
            params[t][i] = saved;
            double fd = (hi - lo) / (2 * step);
            double ad = grads[t][i];
            double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-6});
            ASSERT_LT(std::fabs(fd - ad) / denom, tol)
                << "tensor " << t << " entry " << i << ": fd=" << fd << " ad=" << ad;
        }
    }
}

Mat from(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (auto& row : rows) {
        int c = 0;
        for (double x : row) m(r, c++) = x;
        ++r;
    }
    return m;
}

}  // namespace

TEST(Record, ForwardExamples) {
    Tape tape;
    EXPECT_DOUBLE_EQ(tape.value(tape.sigmoid(tape.constant_scalar(0.0)))[0], 0.5);

    NodeId mm = tape.matmul(tape.constant(from({{1, 2}})), tape.constant(from({{3}, {4}})));
    EXPECT_DOUBLE_EQ(tape.value(mm)[0], 11.0);

    NodeId r = tape.relu(tape.constant(from({{-1, 2}})));
    EXPECT_DOUBLE_EQ(tape.value(r)[0], 0.0);
    EXPECT_DOUBLE_EQ(tape.value(r)[1], 2.0);
}

TEST(Record, ShapeMismatchNamesShapesAndOp) {
    Tape tape;
    NodeId a = tape.constant(Mat(2, 3));
    NodeId b = tape.constant(Mat(2, 2));
    try {
        tape.matmul(a, b);
        FAIL() << "expected shape_error";
    } catch (const shape_error& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("matmul"), std::string::npos);
        EXPECT_NE(msg.find("2x3"), std::string::npos);
        EXPECT_NE(msg.find("2x2"), std::string::npos);
    }
}

TEST(Backward, SimpleExamples) {
    {
        Tape tape;
        NodeId x = tape.parameter(Mat::scalar(3.0));
        auto grads = tape.backward(tape.square(x));
        EXPECT_DOUBLE_EQ(grads.at(x)[0], 6.0);
    }
    {
        Tape tape;
        NodeId x = tape.parameter(from({{-1, 2}}));
        auto grads = tape.backward(tape.mean(tape.relu(x)));
        EXPECT_DOUBLE_EQ(grads.at(x)[0], 0.0);
        EXPECT_DOUBLE_EQ(grads.at(x)[1], 0.5);
    }
}

TEST(Backward, NonScalarRejected) {
    Tape tape;
    NodeId x = tape.parameter(Mat(2, 2, 1.0));
    EXPECT_THROW(tape.backward(x), shape_error);
}

TEST(Backward, UnreachedParameterGetsZeros) {
    Tape tape;
    NodeId used = tape.parameter(Mat::scalar(2.0));
    NodeId unused = tape.parameter(Mat(3, 2, 1.0));
    auto grads = tape.backward(tape.square(used));
    const Mat& g = grads.at(unused);
    EXPECT_EQ(g.rows(), 3);
    EXPECT_EQ(g.cols(), 2);
    for (size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(g[i], 0.0);
}

// One composite expression per primitive op family, checked against central
// finite differences on fixed inputs chosen away from relu/abs kinks.
TEST(Backward, PrimitiveOpsMatchFiniteDifferences) {
    Mat a = from({{0.7, -1.3}, {2.1, 0.4}});
    Mat b = from({{1.2, 0.6}, {-0.8, 1.5}});
    Mat bias = from({{0.3, -0.9}});

    std::vector<std::pair<const char*, LossFn>> cases = {
        {"matmul-add", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.add(t.matmul(p[0], p[1]), p[0]));
         }},
        {"add_bias", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.add_bias(p[0], p[2]));
         }},
        {"sub-mul", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.mul(t.sub(p[0], p[1]), p[1]));
         }},
        {"div", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.div(p[0], t.add(t.square(p[1]), t.constant(Mat(2, 2, 0.5)))));
         }},
        {"scalar_mul", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.scalar_mul(p[0], -2.5));
         }},
        {"relu", [](Tape& t, const std::vector<NodeId>& p) { return t.mean(t.relu(p[0])); }},
        {"sigmoid", [](Tape& t, const std::vector<NodeId>& p) { return t.mean(t.sigmoid(p[0])); }},
        {"tanh", [](Tape& t, const std::vector<NodeId>& p) { return t.mean(t.tanh(p[0])); }},
        {"log-clamp", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.log(t.clamp_min(t.square(p[0]), 1e-12)));
         }},
        {"square", [](Tape& t, const std::vector<NodeId>& p) { return t.mean(t.square(p[0])); }},
        {"abs", [](Tape& t, const std::vector<NodeId>& p) { return t.mean(t.abs(p[0])); }},
        {"sum", [](Tape& t, const std::vector<NodeId>& p) { return t.sum(t.square(p[0])); }},
        {"row_l2_norm", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.row_l2_norm(p[0]));
         }},
        {"concat_rows", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.square(t.concat_rows(p[0], p[1])));
         }},
        {"transpose", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.matmul(t.transpose(p[0]), p[1]));
         }},
        {"sum_rows", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.square(t.sum_rows(p[0])));
         }},
        {"sum_cols", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.square(t.sum_cols(p[0])));
         }},
        {"broadcast_rows", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.mul(t.broadcast_rows(p[2], 2), p[0]));
         }},
        {"broadcast_cols", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.mul(t.broadcast_cols(t.sum_cols(p[0]), 2), p[1]));
         }},
        {"broadcast_scalar", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.mul(t.broadcast_scalar(t.mean(p[0]), 2, 2), p[1]));
         }},
        {"slice-pad", [](Tape& t, const std::vector<NodeId>& p) {
             return t.mean(t.square(t.pad_rows(t.slice_rows(p[0], 0, 1), 1, 3)));
         }},
    };
    for (auto& [name, fn] : cases) {
        SCOPED_TRACE(name);
        expect_fd_match(fn, {a, b, bias}, 1e-4);
    }
}

TEST(Backward, RandomMlpLossesMatchFiniteDifferences) {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        std::uniform_int_distribution<int> layers(2, 4), width(2, 32);
        MlpSpec spec;
        spec.layer_dims.push_back(2);
        for (int i = 0, n = layers(rng); i < n; ++i) spec.layer_dims.push_back(width(rng));
        spec.layer_dims.push_back(1);
        spec.output_head = OutputHead::sigmoid;

        MlpParams params;
        Mat x;
        // Reject draws whose relu preactivations sit near the kink, where the
        // finite-difference step would straddle it.
        for (;;) {
            params = init_mlp(spec, rng);
            x = random_normal(4, 2, rng);
            Mat h = x;
            double closest = 1e9;
            for (size_t i = 0; i + 1 < params.layer_count(); ++i) {
                Mat z = matmul(h, params.weights[i]);
                for (size_t j = 0; j < z.size(); ++j)
                    closest = std::min(closest, std::fabs(z[j]));
                for (size_t j = 0; j < z.size(); ++j) z[j] = z[j] > 0 ? z[j] : 0.0;
                h = std::move(z);
            }
            if (closest > 1e-3) break;
        }

        std::vector<Mat> flat = params.flatten();
        size_t layer_count = params.layer_count();
        for (MutationKind kind : kAllMutations) {
            SCOPED_TRACE(std::string("trial ") + std::to_string(trial) + " " +
                         mutation_name(kind));
            LossFn fn = [&, kind](Tape& t, const std::vector<NodeId>& p) {
                NodeId h = t.constant(x);
                for (size_t i = 0; i < layer_count; ++i) {
                    h = t.add_bias(t.matmul(h, p[2 * i]), p[2 * i + 1]);
                    if (i + 1 < layer_count) h = t.relu(h);
                }
                NodeId d = t.sigmoid(h);
                int m = t.value(d).rows();
                switch (kind) {
                    case MutationKind::minimax:
                        return t.mean(t.log(t.clamp_min(
                            t.sub(t.constant(Mat(m, 1, 1.0)), d), kLogFloor)));
                    case MutationKind::heuristic:
                        return t.scalar_mul(t.mean(t.log(t.clamp_min(d, kLogFloor))), -1.0);
                    default:
                        return t.mean(t.square(t.sub(d, t.constant(Mat(m, 1, 1.0)))));
                }
            };
            expect_fd_match(fn, flat, 1e-4);
        }
    }
}

TEST(BackwardAsGraph, SecondDerivativeExamples) {
    {
        Tape tape;
        NodeId x = tape.parameter(Mat::scalar(3.0));
        NodeId g = tape.backward_as_graph(tape.square(x), {x})[0];
        EXPECT_DOUBLE_EQ(tape.value(g)[0], 6.0);
        auto second = tape.backward(g);
        EXPECT_DOUBLE_EQ(second.at(x)[0], 2.0);
    }
    {
        // x^3 via x * square(x) at x = 2: gradient 3x^2 = 12, second 6x = 12.
        Tape tape;
        NodeId x = tape.parameter(Mat::scalar(2.0));
        NodeId cube = tape.mul(x, tape.square(x));
        NodeId g = tape.backward_as_graph(cube, {x})[0];
        EXPECT_DOUBLE_EQ(tape.value(g)[0], 12.0);
        auto second = tape.backward(g);
        EXPECT_DOUBLE_EQ(second.at(x)[0], 12.0);
    }
}

// The emitted gradient nodes must evaluate to the numeric backward() results.
TEST(BackwardAsGraph, AgreesWithNumericBackward) {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        Tape tape;
        NodeId w = tape.parameter(random_normal(3, 3, rng));
        NodeId b = tape.parameter(random_normal(1, 3, rng));
        NodeId x = tape.constant(random_normal(4, 3, rng));
        NodeId h = tape.tanh(tape.add_bias(tape.matmul(x, w), b));
        NodeId mixed = tape.mul(tape.sigmoid(h), tape.abs(h));
        NodeId norms = tape.row_l2_norm(tape.concat_rows(mixed, tape.relu(h)));
        NodeId loss = tape.mean(tape.square(tape.sub(
            norms, tape.constant(Mat(8, 1, 1.0)))));

        auto numeric = tape.backward(loss);
        auto graph = tape.backward_as_graph(loss, {w, b});
        const Mat& gw = tape.value(graph[0]);
        const Mat& gb = tape.value(graph[1]);
        for (size_t i = 0; i < gw.size(); ++i)
            ASSERT_NEAR(gw[i], numeric.at(w)[i], 1e-12);
        for (size_t i = 0; i < gb.size(); ++i)
            ASSERT_NEAR(gb[i], numeric.at(b)[i], 1e-12);
    }
}

// Gradient-penalty parameter gradients require differentiating through
// backward_as_graph; checked against finite differences of the penalty value.
TEST(BackwardAsGraph, GradientPenaltySecondOrderMatchesFiniteDifferences) {
    Rng rng(11);
    MlpSpec d_spec{{2, 8, 1}, OutputHead::sigmoid};
    for (int trial = 0; trial < 5; ++trial) {
        MlpParams d_params = init_mlp(d_spec, rng);
        for (Mat& bm : d_params.biases)
            bm = random_normal(bm.rows(), bm.cols(), rng, 0.0, 0.1);
        Mat xhat = random_normal(3, 2, rng);

        LossFn penalty = [&](Tape& t, const std::vector<NodeId>& p) {
            NodeId xn = t.constant(xhat);
            NodeId h = t.relu(t.add_bias(t.matmul(xn, p[0]), p[1]));
            NodeId d = t.sigmoid(t.add_bias(t.matmul(h, p[2]), p[3]));
            NodeId grad = t.backward_as_graph(t.sum(d), {xn})[0];
            return t.mean(t.square(t.sub(t.row_l2_norm(grad), t.constant(Mat(3, 1, 1.0)))));
        };
        expect_fd_match(penalty, d_params.flatten(), 1e-3);
    }
}

TEST(Tape, DeterministicEvaluation) {
    auto build = [] {
        Tape tape;
        Rng rng(99);
        NodeId w = tape.parameter(random_normal(4, 4, rng));
        return tape.value(tape.mean(tape.sigmoid(tape.matmul(w, w))));
    };
    Mat a = build(), b = build();
    EXPECT_TRUE(a == b);
}

TEST(Adam, ZeroGradientIsIdentity) {
    std::vector<Mat> params{Mat(2, 2, 1.5)};
    std::vector<Mat> grads{Mat(2, 2, 0.0)};
    AdamState state = AdamState::like(params);
    adam_step(params, grads, state, {});
    EXPECT_EQ(state.step_count, 1u);
    for (size_t i = 0; i < params[0].size(); ++i) EXPECT_DOUBLE_EQ(params[0][i], 1.5);
}

TEST(Adam, FirstStepMatchesClosedForm) {
    AdamConfig cfg{0.1, 0.5, 0.999, 1e-8};
    std::vector<Mat> params{Mat::scalar(0.0)};
    std::vector<Mat> grads{Mat::scalar(1.0)};
    AdamState state = AdamState::like(params);
    adam_step(params, grads, state, cfg);
    // independently: mhat = (1-b1)g/(1-b1) = 1, vhat = (1-b2)g^2/(1-b2) = 1
    double expected = -cfg.alpha * 1.0 / (std::sqrt(1.0) + cfg.epsilon);
    EXPECT_NEAR(params[0][0], expected, 1e-15);
    EXPECT_NEAR(params[0][0], -0.1, 1e-8);
}

TEST(Adam, ConvergesOnQuadratic) {
    AdamConfig cfg{0.1, 0.5, 0.999, 1e-8};
    std::vector<Mat> params{Mat::scalar(1.0)};
    AdamState state = AdamState::like(params);
    for (int i = 0; i < 100; ++i) {
        std::vector<Mat> grads{Mat::scalar(2.0 * params[0][0])};
        adam_step(params, grads, state, cfg);
    }
    EXPECT_LT(std::fabs(params[0][0]), 0.05);
    for (const Mat& v : state.second_moment)
        for (size_t i = 0; i < v.size(); ++i) EXPECT_GE(v[i], 0.0);
}

TEST(Adam, NonFiniteGradientRejected) {
    std::vector<Mat> params{Mat::scalar(0.0)};
    std::vector<Mat> grads{Mat::scalar(std::numeric_limits<double>::quiet_NaN())};
    AdamState state = AdamState::like(params);
    EXPECT_THROW(adam_step(params, grads, state, {}), numeric_error);
}
