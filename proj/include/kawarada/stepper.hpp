#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kawarada/errors.hpp"
#include "kawarada/expm.hpp"
#include "kawarada/mesh.hpp"
#include "kawarada/operators.hpp"
#include "kawarada/reaction.hpp"

namespace kawarada {

struct SchemeParams {
    double theta = 0.5;            // quadrature weight; 0.5 gives the second-order rule
    double tau0 = 1e-3;            // base temporal step
    double eps0 = 0.90;            // max-v threshold that switches on adaptation
    double quench_threshold = 1.0; // component value declaring quench
    double t0 = 0.0;
    double t_max = 2.0;            // safety horizon
    double tau_min = 1e-12;        // hard step floor
    int max_retries = 8;           // tau halvings before declaring a monitor violation
    long max_steps = 50'000'000;
    double mono_tol = 1e-12;       // monotonicity violations below this are noise
};

struct State {
    std::vector<double> v;
    double t = 0.0;
    double tau = 0.0; // step to attempt next (already adapted/truncated)
    long k = 0;
    std::vector<double> ut; // derivative estimate Mv + g at (v, t)

    double max_v() const { return *std::max_element(v.begin(), v.end()); }
    double max_ut() const { return *std::max_element(ut.begin(), ut.end()); }
};

struct QuenchEvent {
    double t_q = 0.0;
    int flat_index = -1;
    double x = 0.0, y = 0.0;
    double peak_ut = 0.0; // max derivative estimate at the last pre-quench step
};

struct StepRecord {
    long k;
    double t;
    double tau;
    double max_v;
    double max_ut;
    int retries;
    bool clipped;
    bool premise_ok;
};

enum class RunStatus { Quenched, ReachedTMax, MonitorViolation, TauUnderflow, StepLimit };

inline const char* run_status_code(RunStatus s) {
    switch (s) {
    case RunStatus::Quenched: return "quenched";
    case RunStatus::ReachedTMax: return "t_max_reached";
    case RunStatus::MonitorViolation: return "monitor_violation";
    case RunStatus::TauUnderflow: return "tau_underflow";
    case RunStatus::StepLimit: return "step_limit";
    }
    return "unknown";
}

struct MonitorSummary {
    long positivity_retries = 0;
    long monotonicity_retries = 0;
    long premise_violations = 0;
    long clip_events = 0;
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> v;
    std::vector<double> ut;
};

struct RunReport {
    RunStatus status = RunStatus::ReachedTMax;
    std::string reason;
    std::optional<QuenchEvent> quench;
    long steps = 0;
    double t_end = 0.0;
    double tau_last = 0.0;
    std::vector<double> v_final;
    std::vector<double> ut_final;
    MonitorSummary monitors;
    bool startup_premise_ok = false;
    double startup_premise_min = 0.0;
    std::vector<StepRecord> history;
    std::vector<Snapshot> snapshots;
};

/// Arc-length step control: the base step until the solution nears quenching,
/// then shrink with the growth of the derivative estimate.
inline double adapt_tau(const State& state, const SchemeParams& p) {
    if (state.max_v() < p.eps0)
        return p.tau0;
    const double m = state.max_ut();
    return std::max(p.tau_min, p.tau0 / std::sqrt(1.0 + m * m));
}

/// Explicit one-step estimate of the next state, clipped just below the
/// quench threshold so the reaction stays evaluable.
inline std::vector<double> predictor(const State& state, double tau, bool* clipped = nullptr) {
    std::vector<double> w(state.v.size());
    bool clip = false;
    const double cap = 1.0 - 1e-12;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double value = state.v[i] + tau * state.ut[i];
        if (value > cap) {
            value = cap;
            clip = true;
        }
        w[i] = value;
    }
    if (clipped) *clipped = clip;
    return w;
}

struct StepResult {
    bool quenched = false;
    State next;                      // valid when !quenched
    std::optional<QuenchEvent> event; // valid when quenched
    int retries = 0;
    bool clipped = false;
    bool premise_ok = true;
    int positivity_retries = 0;
    int monotonicity_retries = 0;
};

/// Advance one accepted step from `state` using state.tau as the first trial
/// step; positivity/monotonicity failures halve tau and retry. A component
/// crossing the quench threshold ends the run rather than the step.
inline StepResult step(const State& state, const SplitOperator& ops, Propagator& px, Propagator& py,
                       const ReactionTerm& reaction, const SchemeParams& p) {
    const std::size_t n = state.v.size();
    std::vector<double> g_old(n);
    reaction.g(state.v, state.t, g_old);

    StepResult res;
    double tau = state.tau;
    for (int attempt = 0; attempt <= p.max_retries; ++attempt) {
        if (tau < p.tau_min)
            throw TimeStepUnderflow("tau underflow at t=" + std::to_string(state.t));
        px.set_tau(tau);
        py.set_tau(tau);

        std::vector<double> w(n);
        bool clipped = false;
        {
            const double cap = 1.0 - 1e-12;
            for (std::size_t i = 0; i < n; ++i) {
                double value = state.v[i] + tau * state.ut[i];
                if (value > cap) {
                    value = cap;
                    clipped = true;
                }
                w[i] = value;
            }
        }

        std::vector<double> f(n);
        reaction.g(w, state.t + tau, f);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = p.theta * g_old[i] + (1.0 - p.theta) * f[i];

        std::vector<double> v_next = strang_apply(px, py, state.v);
        {
            std::vector<double> corr = phi_minus_identity_weighted(ops, px, py, f);
            for (std::size_t i = 0; i < n; ++i)
                v_next[i] += corr[i];
        }

        // quench detection precedes the monitors: the triggering step is final
        std::size_t argmax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (v_next[i] > v_next[argmax]) argmax = i;
        if (v_next[argmax] >= p.quench_threshold) {
            QuenchEvent ev;
            ev.t_q = state.t + tau;
            ev.flat_index = static_cast<int>(argmax);
            const int nx = ops.mesh().nx();
            ev.x = ops.mesh().x(static_cast<int>(argmax) % nx + 1);
            ev.y = ops.mesh().y(static_cast<int>(argmax) / nx + 1);
            ev.peak_ut = state.max_ut();
            res.quenched = true;
            res.event = ev;
            res.clipped = clipped;
            res.retries = attempt;
            return res;
        }

        bool positive = true, monotone = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(v_next[i] > 0.0)) positive = false;
            if (v_next[i] - state.v[i] < -p.mono_tol) monotone = false;
        }
        if (!positive || !monotone) {
            if (!positive) ++res.positivity_retries;
            if (!monotone) ++res.monotonicity_retries;
            tau *= 0.5;
            continue;
        }

        State next;
        next.v = std::move(v_next);
        next.t = state.t + tau;
        next.tau = tau;
        next.k = state.k + 1;
        next.ut.resize(n);
        ops.apply_m(next.v, next.ut);
        {
            std::vector<double> g_new(n);
            reaction.g(next.v, next.t, g_new);
            for (std::size_t i = 0; i < n; ++i)
                next.ut[i] += g_new[i];
        }
        res.premise_ok = *std::min_element(next.ut.begin(), next.ut.end()) > 0.0;
        res.next = std::move(next);
        res.retries = attempt;
        res.clipped = clipped;
        return res;
    }
    throw MonitorViolation("positivity/monotonicity still violated after " +
                           std::to_string(p.max_retries) + " tau halvings at t=" +
                           std::to_string(state.t));
}

struct RunSetup {
    const Mesh2D* mesh = nullptr;
    const SplitOperator* ops = nullptr;
    ReactionTerm reaction;
    SchemeParams params;
    std::vector<double> v0;
    std::vector<double> sample_times; // sorted; the stepper lands on them exactly
    bool record_history = true;
};

/// Full time integration: adapt, truncate to sampling times and the horizon,
/// step with monitor retries, detect quench, and collect the report.
inline RunReport run(const RunSetup& setup) {
    const SchemeParams& p = setup.params;
    const std::size_t n = setup.v0.size();
    RunReport report;

    State state;
    state.v = setup.v0;
    state.t = p.t0;
    state.k = 0;
    state.ut.resize(n);
    setup.ops->apply_m(state.v, state.ut);
    {
        std::vector<double> g0(n);
        setup.reaction.g(state.v, state.t, g0);
        for (std::size_t i = 0; i < n; ++i)
            state.ut[i] += g0[i];
    }
    report.startup_premise_min = *std::min_element(state.ut.begin(), state.ut.end());
    report.startup_premise_ok = report.startup_premise_min > 0.0;

    Propagator px(*setup.ops, Axis::X);
    Propagator py(*setup.ops, Axis::Y);

    std::size_t next_sample = 0;
    auto take_due_snapshots = [&]() {
        while (next_sample < setup.sample_times.size() &&
               state.t >= setup.sample_times[next_sample]) {
            report.snapshots.push_back({setup.sample_times[next_sample], state.v, state.ut});
            ++next_sample;
        }
    };
    take_due_snapshots();

    auto finish = [&](RunStatus status) {
        report.status = status;
        report.reason = run_status_code(status);
        report.steps = state.k;
        report.t_end = state.t;
        report.tau_last = state.tau;
        report.v_final = std::move(state.v);
        report.ut_final = std::move(state.ut);
        return report;
    };

    while (true) {
        if (state.t >= p.t_max)
            return finish(RunStatus::ReachedTMax);
        if (state.k >= p.max_steps)
            return finish(RunStatus::StepLimit);

        double tau = adapt_tau(state, p);
        bool capped_to_target = false;
        double target = std::numeric_limits<double>::infinity();
        if (next_sample < setup.sample_times.size())
            target = setup.sample_times[next_sample];
        target = std::min(target, p.t_max);
        if (state.t + tau >= target) {
            tau = target - state.t;
            capped_to_target = true;
        }
        if (tau <= 0.0) {
            // already at the target (fp equality handled by the snapshot scan)
            state.t = target;
            take_due_snapshots();
            continue;
        }
        state.tau = tau;

        StepResult sr;
        try {
            sr = step(state, *setup.ops, px, py, setup.reaction, p);
        } catch (const TimeStepUnderflow&) {
            return finish(RunStatus::TauUnderflow);
        } catch (const MonitorViolation&) {
            return finish(RunStatus::MonitorViolation);
        }

        report.monitors.positivity_retries += sr.positivity_retries;
        report.monitors.monotonicity_retries += sr.monotonicity_retries;
        if (sr.clipped) ++report.monitors.clip_events;

        if (sr.quenched) {
            report.quench = sr.event;
            report.steps = state.k;
            report.t_end = sr.event->t_q;
            report.tau_last = state.tau;
            report.status = RunStatus::Quenched;
            report.reason = run_status_code(RunStatus::Quenched);
            report.v_final = std::move(state.v);
            report.ut_final = std::move(state.ut);
            return report;
        }

        state = std::move(sr.next);
        if (!sr.premise_ok) ++report.monitors.premise_violations;
        if (capped_to_target && sr.retries == 0)
            state.t = target; // landed exactly; pin against fp drift

        if (setup.record_history)
            report.history.push_back({state.k, state.t, state.tau, state.max_v(), state.max_ut(),
                                      sr.retries, sr.clipped, sr.premise_ok});
        take_due_snapshots();
    }
}

} // namespace kawarada
