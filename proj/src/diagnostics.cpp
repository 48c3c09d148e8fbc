#include "invnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace invnet {

namespace {

constexpr std::size_t kFiniteDifferenceParamGuard = 100000;

double angle_from_sums(double duv, double duu, double dvv) {
    if (duu == 0.0 || dvv == 0.0) {
        throw NumericError("update_angle: zero-norm update vector");
    }
    // cos^2 from products of identical expressions makes the angle exactly 0
    // for bitwise-equal inputs.
    const double cos_sq = (duv * duv) / (duu * dvv);
    double c = std::sqrt(std::min(cos_sq, 1.0));
    if (duv < 0.0) {
        c = -c;
    }
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace

double update_angle(const Tensor& u, const Tensor& v) {
    if (!u.same_shape(v)) {
        throw ShapeError("update_angle: shape mismatch " +
                         shape_to_string(u.shape()) + " vs " +
                         shape_to_string(v.shape()));
    }
    double duv = 0.0;
    double duu = 0.0;
    double dvv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        duv += u[i] * v[i];
        duu += u[i] * u[i];
        dvv += v[i] * v[i];
    }
    return angle_from_sums(duv, duu, dvv);
}

std::vector<AngleRecord> angle_report(const UpdateSet& alg,
                                      const UpdateSet& ref, long step,
                                      AngleReportOptions options) {
    if (alg.layers.size() != ref.layers.size()) {
        throw ShapeError("angle_report: update sets differ in depth");
    }
    std::vector<AngleRecord> records;
    double duv_all = 0.0;
    double duu_all = 0.0;
    double dvv_all = 0.0;

    auto accumulate = [](const Tensor& u, const Tensor& v, double& duv,
                         double& duu, double& dvv) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            duv += u[i] * v[i];
            duu += u[i] * u[i];
            dvv += v[i] * v[i];
        }
    };

    for (std::size_t l = 0; l < alg.layers.size(); ++l) {
        const UpdateSet::Entry& a = alg.layers[l];
        const UpdateSet::Entry& r = ref.layers[l];
        if (!a.weight.same_shape(r.weight) || !a.bias.same_shape(r.bias)) {
            throw ShapeError("angle_report: layer " + std::to_string(l) +
                             " shapes differ between update sets");
        }
        double duv = 0.0;
        double duu = 0.0;
        double dvv = 0.0;
        accumulate(a.weight, r.weight, duv, duu, dvv);
        if (options.include_bias) {
            accumulate(a.bias, r.bias, duv, duu, dvv);
        }
        duv_all += duv;
        duu_all += duu;
        dvv_all += dvv;
        if (duu == 0.0 || dvv == 0.0) {
            continue;  // undefined angle: recorded as missing, never as 0
        }
        AngleRecord rec;
        rec.step = step;
        rec.layer = static_cast<int>(l);
        rec.algorithm = alg.algorithm;
        rec.degrees = angle_from_sums(duv, duu, dvv);
        records.push_back(std::move(rec));
    }

    if (duu_all != 0.0 && dvv_all != 0.0) {
        AngleRecord rec;
        rec.step = step;
        rec.layer = -1;
        rec.algorithm = alg.algorithm;
        rec.degrees = angle_from_sums(duv_all, duu_all, dvv_all);
        records.push_back(std::move(rec));
    }
    return records;
}

UpdateSet finite_difference_grads(const Network& net, const Tensor& input,
                                  const Tensor& labels_onehot,
                                  double step_size) {
    if (net.parameter_count() > kFiniteDifferenceParamGuard) {
        throw Error("finite_difference_grads: refusing network with " +
                    std::to_string(net.parameter_count()) +
                    " parameters (guard: " +
                    std::to_string(kFiniteDifferenceParamGuard) + ")");
    }
    if (!(step_size > 0.0)) {
        throw Error("finite_difference_grads: step size must be positive");
    }

    Network probe = net;
    auto loss = [&]() {
        ForwardCache cache = probe.forward(input);
        return cross_entropy_loss(cache.logits, labels_onehot);
    };

    UpdateSet out;
    out.algorithm = "fd";
    out.layers.resize(net.depth());

    std::vector<Tensor*> params = probe.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor grad(params[k]->shape());
        for (std::size_t i = 0; i < params[k]->size(); ++i) {
            const double saved = (*params[k])[i];
            (*params[k])[i] = saved + step_size;
            const double up = loss();
            (*params[k])[i] = saved - step_size;
            const double down = loss();
            (*params[k])[i] = saved;
            grad[i] = -(up - down) / (2.0 * step_size);
        }
        UpdateSet::Entry& entry = out.layers[k / 2];
        if (k % 2 == 0) {
            entry.weight = std::move(grad);
        } else {
            entry.bias = std::move(grad);
        }
    }
    out.ensure_finite();
    return out;
}

std::vector<double> target_distance_trace(const TargetState& state) {
    std::vector<double> trace;
    trace.reserve(state.layers.size());
    for (const TargetState::LayerState& ls : state.layers) {
        trace.push_back(ls.distance);
    }
    return trace;
}

}  // namespace invnet
