# cython: language_level=3
"""Compiled rollout kernel.

Bit-identical to the pure-Python rollout (`industrialbench._kernel_py`):
the generator, distribution transforms, and every dynamics expression
mirror the reference implementation term for term, and the extension is
compiled with FP contraction disabled so no fused operations change the
rounding.  The parity tests and the backend benchmark both assert exact
equality between the two kernels.

Only the built-in policies and the disabled mis-calibration mode run here;
anything else (custom callables, external drivers) goes through the
pure-Python environment.
"""

from libc.math cimport exp, log, sqrt
from libc.stdint cimport uint64_t

from .dynamics import SHIFT_STEP as _PY_SHIFT_STEP
from .environment import OBSERVATION_DIMS

BACKEND_NAME = "compiled"

cdef double SHIFT_STEP = _PY_SHIFT_STEP

# 2**-53, written as an exact power-of-two division.
cdef double U53 = 1.0 / 9007199254740992.0

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15


# ---------------------------------------------------------------------------
# Random stream (xoshiro256** seeded via splitmix64)
# ---------------------------------------------------------------------------

cdef struct XStream:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3
    long long count


cdef inline uint64_t splitmix_next(uint64_t* state) nogil:
    state[0] = state[0] + GOLDEN
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef void seed_stream(XStream* st, uint64_t seed) nogil:
    cdef uint64_t state = seed
    cdef uint64_t w0 = splitmix_next(&state)
    cdef uint64_t w1 = splitmix_next(&state)
    cdef uint64_t w2 = splitmix_next(&state)
    cdef uint64_t w3 = splitmix_next(&state)
    if w0 == 0 and w1 == 0 and w2 == 0 and w3 == 0:
        w0 = 1
    st.s0 = w0
    st.s1 = w1
    st.s2 = w2
    st.s3 = w3
    st.count = 0


cdef inline uint64_t rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t next_u64(XStream* st) nogil:
    cdef uint64_t result = rotl(st.s1 * <uint64_t>5, 7) * <uint64_t>9
    cdef uint64_t t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = rotl(st.s3, 45)
    st.count += 1
    return result


cdef inline double u01(XStream* st) nogil:
    return <double>(next_u64(st) >> 11) * U53


cdef inline double u01_open(XStream* st) nogil:
    return (<double>(next_u64(st) >> 11) + 0.5) * U53


cdef inline double c_uniform(XStream* st, double lo, double hi) nogil:
    return lo + u01(st) * (hi - lo)


cdef inline double c_gauss(XStream* st, double mean, double sd) nogil:
    return mean + sd * ppnd16(u01_open(st))


cdef inline double c_exponential(XStream* st, double mean) nogil:
    return -mean * log(u01_open(st))


cdef inline int c_bernoulli(XStream* st, double prob) nogil:
    return 1 if u01(st) < prob else 0


# Inverse standard normal CDF (Wichura's PPND16); literal-for-literal the
# same rational approximations as the reference implementation.
cdef double ppnd16(double p) nogil:
    cdef double q = p - 0.5
    cdef double r, num, den, val
    if -0.425 <= q <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


# ---------------------------------------------------------------------------
# Dynamics (mis-calibration disabled throughout)
# ---------------------------------------------------------------------------

cdef struct EnvState:
    double p
    double v
    double g
    double s
    double hist[10]
    double h_v
    double h_g
    double o_c
    double s_e
    double c_hat
    double consumption
    double eff_v
    double eff_g
    double f_b
    double fatigue
    double last_reward


cdef inline double clamp(double x, double lo, double hi) nogil:
    return lo if x < lo else (hi if x > hi else x)


cdef inline double operational_cost(double p, double v, double g) nogil:
    return exp((2.0 * p + 4.0 * v + 2.5 * g) / 100.0)


cdef inline double transform_v(double v, double g, double p) nogil:
    return (g + p + 2.0) / (v - p + 101.0)


cdef inline double transform_g(double g, double p) nogil:
    return 1.0 / (g + p + 1.0)


cdef inline double effective_velocity(double v, double g, double p) nogil:
    cdef double lo = transform_v(0.0, 100.0, p)
    cdef double hi = transform_v(100.0, 0.0, p)
    return clamp((transform_v(v, g, p) - lo) / (hi - lo), 0.0, 1.0)


cdef inline double effective_gain(double g, double p) nogil:
    cdef double lo = transform_g(100.0, p)
    cdef double hi = transform_g(0.0, p)
    return clamp((transform_g(g, p) - lo) / (hi - lo), 0.0, 1.0)


cdef inline double update_hidden(double h_prev, double e, double eta) nogil:
    cdef double grown
    if e <= 0.05:
        return e
    if h_prev >= 1.2:
        grown = 1.1 * h_prev
        return grown if grown < 5.0 else 5.0
    return 0.9 * h_prev + eta / 3.0


cdef void observe(EnvState* env, XStream* st, bint update_latents) nogil:
    env.o_c = (env.hist[5] * (1.0 / 9.0) + env.hist[6] * (2.0 / 9.0)
               + env.hist[7] * (3.0 / 9.0) + env.hist[8] * (2.0 / 9.0)
               + env.hist[9] * (1.0 / 9.0))
    env.s_e = clamp(env.s / 20.0 - env.p / 50.0 - 1.5, -1.5, 1.5)
    # drift disabled: m == 0 always
    env.c_hat = env.o_c + 25.0 * 0.0
    env.consumption = env.c_hat + c_gauss(st, 0.0, 1.0 + 0.02 * env.c_hat)

    env.eff_v = effective_velocity(env.v, env.g, env.p)
    env.eff_g = effective_gain(env.g, env.p)
    cdef double eta_ve = c_exponential(st, 0.05)
    cdef double eta_ge = c_exponential(st, 0.05)
    cdef double eta_vu = c_uniform(st, 0.0, 1.0)
    cdef double eta_gu = c_uniform(st, 0.0, 1.0)
    cdef int eta_vb = c_bernoulli(st, env.eff_v)
    cdef int eta_gb = c_bernoulli(st, env.eff_g)
    cdef double eta_v = eta_ve + (1.0 - eta_ve) * eta_vu * eta_vb * env.eff_v
    cdef double eta_g = eta_ge + (1.0 - eta_ge) * eta_gu * eta_gb * env.eff_g
    eta_v = eta_v if eta_v < 1.0 else 1.0
    eta_g = eta_g if eta_g < 1.0 else 1.0

    if update_latents:
        env.h_v = update_hidden(env.h_v, env.eff_v, eta_v)
        env.h_g = update_hidden(env.h_g, env.eff_g, eta_g)
    cdef double alpha
    if (env.h_v if env.h_v > env.h_g else env.h_g) >= 1.2:
        alpha = 1.0 / (1.0 + exp(-c_gauss(st, 2.4, 0.4)))
    else:
        alpha = eta_v if eta_v > eta_g else eta_g

    cdef double raw_basic = 30000.0 / (5.0 * env.v + 100.0) - 0.01 * env.g * env.g
    env.f_b = raw_basic if raw_basic > 0.0 else 0.0
    env.fatigue = env.f_b * (1.0 + 2.0 * alpha)


cdef void env_reset(EnvState* env, XStream* st, double set_point,
                    double velocity, double gain, double shift) nogil:
    env.p = set_point
    env.v = velocity
    env.g = gain
    env.s = shift
    cdef double o0 = operational_cost(env.p, env.v, env.g)
    cdef int k
    for k in range(10):
        env.hist[k] = o0
    env.h_v = 0.0
    env.h_g = 0.0
    observe(env, st, False)
    env.last_reward = 0.0


cdef void env_step(EnvState* env, XStream* st, double dv, double dg, double ds) nogil:
    env.v = clamp(env.v + dv, 0.0, 100.0)
    env.g = clamp(env.g + 10.0 * dg, 0.0, 100.0)
    env.s = clamp(env.s + SHIFT_STEP * ds, 0.0, 100.0)

    cdef double o_new = operational_cost(env.p, env.v, env.g)
    cdef int k
    for k in range(9, 0, -1):
        env.hist[k] = env.hist[k - 1]
    env.hist[0] = o_new

    observe(env, st, True)
    env.last_reward = -(env.consumption + env.fatigue)


cdef list extended_row(EnvState* env):
    # EXTENDED_DIMS order
    return [
        env.p, env.v, env.eff_v, env.g, env.eff_g, env.s, env.s_e,
        0.0, 0.0, 0.0, 0.0,  # drift latents and output, pinned in disabled mode
        env.c_hat, env.consumption, env.fatigue,
        env.hist[0], env.hist[1], env.hist[2], env.hist[3], env.hist[4],
        env.hist[5], env.hist[6], env.hist[7], env.hist[8], env.hist[9],
        env.o_c, env.c_hat, env.h_v, env.h_g,
    ]


cdef inline double _checked_delta(object value, str name):
    cdef double x = value
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"{name}={x!r} outside [-1.0, 1.0]")
    return x


def rollout(
    set_point,
    velocity,
    gain,
    shift,
    steps,
    env_seed,
    policy_seed,
    policy_mode,
    policy_params=None,
    actions=None,
):
    """Compiled counterpart of ``industrialbench._kernel_py.rollout``.

    Same signature, same return structure, bit-identical values.
    """
    cdef double p = set_point
    cdef double v0 = velocity
    cdef double g0 = gain
    cdef double s0 = shift
    for name, value in (("set_point", p), ("velocity", v0), ("gain", g0), ("shift", s0)):
        if not 0.0 <= value <= 100.0:
            raise ValueError(f"{name}={value!r} outside [0, 100]")

    cdef XStream env_stream, policy_stream
    seed_stream(&env_stream, <uint64_t>(env_seed & 0xFFFFFFFFFFFFFFFF))

    cdef bint use_policy_stream = False
    cdef double const_dv = 0.0, const_dg = 0.0, const_ds = 0.0
    if policy_mode == "max-entropy":
        seed_stream(&policy_stream, <uint64_t>(policy_seed & 0xFFFFFFFFFFFFFFFF))
        use_policy_stream = True
    elif policy_mode == "constant":
        const_dv = _checked_delta(policy_params[0], "delta_v")
        const_dg = _checked_delta(policy_params[1], "delta_g")
        const_ds = _checked_delta(policy_params[2], "delta_s")
    elif policy_mode == "replay":
        if actions is None or len(actions) < steps:
            raise ValueError("replay mode needs an action log with at least `steps` entries")
    else:
        raise ValueError(f"unknown policy mode: {policy_mode!r}")

    cdef EnvState env
    env_reset(&env, &env_stream, p, v0, g0, s0)
    obs0 = [env.p, env.v, env.g, env.s, env.consumption, env.fatigue]

    out_actions = []
    extended = []
    rewards = []
    cdef Py_ssize_t i, n = steps
    cdef double dv, dg, ds
    for i in range(n):
        if use_policy_stream:
            dv = c_uniform(&policy_stream, -1.0, 1.0)
            dg = c_uniform(&policy_stream, -1.0, 1.0)
            ds = c_uniform(&policy_stream, -1.0, 1.0)
        elif policy_mode == "constant":
            dv = const_dv
            dg = const_dg
            ds = const_ds
        else:
            entry = actions[i]
            dv = _checked_delta(entry[0], "delta_v")
            dg = _checked_delta(entry[1], "delta_g")
            ds = _checked_delta(entry[2], "delta_s")
        env_step(&env, &env_stream, dv, dg, ds)
        rewards.append(env.last_reward)
        out_actions.append([dv, dg, ds])
        extended.append(extended_row(&env))

    return {
        "obs0": obs0,
        "actions": out_actions,
        "extended": extended,
        "rewards": rewards,
        "env_stream_state": (env_stream.s0, env_stream.s1, env_stream.s2,
                             env_stream.s3, env_stream.count),
        "policy_stream_state": (
            (policy_stream.s0, policy_stream.s1, policy_stream.s2,
             policy_stream.s3, policy_stream.count)
            if use_policy_stream else None
        ),
        "observation_dims": list(OBSERVATION_DIMS),
    }
