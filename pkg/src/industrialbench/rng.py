"""Seedable deterministic random streams.

Every stochastic quantity in the benchmark is drawn from a
:class:`RandomStream`.  The generator is pinned to xoshiro256** (Blackman &
Vigna), seeded through splitmix64, so trajectories are reproducible across
runs, platforms, and reimplementations of this package.

Draw accounting is part of the contract: each of ``gauss``, ``exponential``,
``bernoulli`` and ``uniform`` consumes exactly one raw 64-bit generator step
and advances ``draw_count`` by one.  Gaussians therefore use the inverse-CDF
method (Wichura's PPND16 quantile function) rather than rejection sampling,
whose variable consumption would make stream positions state-dependent.
"""

from __future__ import annotations

import math

MASK64 = 0xFFFFFFFFFFFFFFFF

# Name recorded in dataset metadata so files can be replayed.
GENERATOR_NAME = "xoshiro256starstar"

_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_seed(master: int, *words: int) -> int:
    """Mix extra words into a master seed, producing an independent sub-seed.

    Used by the harness to give every (set point, episode, role) combination
    its own stream: adding a set point or episode never perturbs the streams
    of the others.  The mixing is one splitmix64 step per word, folding the
    word into the running state by xor.
    """
    state = master & MASK64
    for word in words:
        _, state = _splitmix64(state ^ (word & MASK64))
    return state


def float_bits(x: float) -> int:
    """IEEE-754 bit pattern of a double, as an unsigned 64-bit word."""
    import struct

    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


# ---------------------------------------------------------------------------
# Standard normal quantile (Wichura's PPND16 rational approximations).
# Relative error < ~2e-15 over the full open unit interval; verified against
# an independent implementation in the test suite.
# ---------------------------------------------------------------------------


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF for p in (0, 1)."""
    q = p - 0.5
    if abs(q) <= 0.425:
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
    r = math.sqrt(-math.log(r))
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


class StreamError(ValueError):
    """Raised for invalid distribution parameters."""


class RandomStream:
    """xoshiro256** stream with fixed one-step-per-draw distribution methods.

    A stream is single-owner: concurrent draws from one instance are not
    supported.  Create one stream per environment (or per role) instead.
    """

    __slots__ = ("_s0", "_s1", "_s2", "_s3", "draw_count")

    def __init__(self, seed: int):
        state = seed & MASK64
        words = []
        for _ in range(4):
            state, out = _splitmix64(state)
            words.append(out)
        if not any(words):  # all-zero state is the one forbidden xoshiro state
            words[0] = 1
        self._s0, self._s1, self._s2, self._s3 = words
        self.draw_count = 0

    # -- raw generator ------------------------------------------------------

    def next_u64(self) -> int:
        """Advance the generator one step and return 64 random bits."""
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        x = (s1 * 5) & MASK64
        result = (((x << 7) | (x >> 57)) & MASK64) * 9 & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        self.draw_count += 1
        return result

    def _u01(self) -> float:
        # 53-bit mantissa, in [0, 1)
        return (self.next_u64() >> 11) * 1.1102230246251565e-16  # 2**-53

    def _u01_open(self) -> float:
        # strictly inside (0, 1); safe for log() and the normal quantile
        return ((self.next_u64() >> 11) + 0.5) * 1.1102230246251565e-16

    # -- distributions (exactly one raw step each) --------------------------

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform draw on [lo, hi)."""
        if lo > hi:
            raise StreamError(f"uniform bounds inverted: lo={lo} > hi={hi}")
        return lo + self._u01() * (hi - lo)

    def gauss(self, mean: float, sd: float) -> float:
        """Normal draw via the inverse CDF; sd == 0 degenerates to mean."""
        if sd < 0.0:
            raise StreamError(f"negative standard deviation: {sd}")
        return mean + sd * normal_quantile(self._u01_open())

    def exponential(self, mean: float) -> float:
        """Exponential draw parameterized by its mean (not rate)."""
        if mean <= 0.0:
            raise StreamError(f"exponential mean must be positive: {mean}")
        return -mean * math.log(self._u01_open())

    def bernoulli(self, prob: float) -> int:
        """Single Binom(1, prob) trial: 1 with probability prob, else 0."""
        if not 0.0 <= prob <= 1.0:
            raise StreamError(f"bernoulli probability out of [0,1]: {prob}")
        return 1 if self._u01() < prob else 0

    # -- checkpointing -------------------------------------------------------

    @property
    def state(self) -> tuple[int, int, int, int, int]:
        """Full stream state: the four state words plus the draw counter."""
        return (self._s0, self._s1, self._s2, self._s3, self.draw_count)

    @state.setter
    def state(self, value) -> None:
        s0, s1, s2, s3, count = value
        self._s0 = s0 & MASK64
        self._s1 = s1 & MASK64
        self._s2 = s2 & MASK64
        self._s3 = s3 & MASK64
        self.draw_count = int(count)


class ZeroNoiseStream:
    """Stream stub returning the no-noise element of every distribution.

    Substituting this for a :class:`RandomStream` makes the benchmark
    dynamics fully deterministic: gaussians collapse to their mean,
    exponential/uniform/bernoulli draws to zero (their lower support point).
    Draws are still counted so consumption audits stay comparable.
    """

    def __init__(self):
        self.draw_count = 0

    def uniform(self, lo: float, hi: float) -> float:
        self.draw_count += 1
        return lo

    def gauss(self, mean: float, sd: float) -> float:
        self.draw_count += 1
        return mean

    def exponential(self, mean: float) -> float:
        self.draw_count += 1
        return 0.0

    def bernoulli(self, prob: float) -> int:
        self.draw_count += 1
        return 0
