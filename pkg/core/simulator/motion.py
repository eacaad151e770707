"""
Analytic arm motion.

The base link (the camera link) walks along a straight line or an O-shaped
loop with a raised-cosine speed profile, bobbing and swaying with the gait.
Every other link hangs off its parent through a relative ZYX rotation
(shoulder profile at depth 1, elbow profile deeper). Jump scenarios add
vertical excursions made of a push-off, a ballistic flight under the model's
gravity and a mirrored landing.

Everything is a closed form in t up to the second derivative, so positions,
velocities, accelerations, attitudes, body rates and angular accelerations
are exact at any time, not only on the IMU grid. Gait oscillations are
phased from the middle of the motion interval, where the envelope is
symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from core.body.model import ChainModel
from core.config import PathShape, ScenarioConfig, ScenarioKind
from core.rotation import euler_accels_to_body, euler_rates_to_body, euler_to_quat, quat_mul, quat_to_dcm

STEP_FREQ = 1.8          # Hz
STRIDE_FREQ = STEP_FREQ / 2.0
BOB_AMPLITUDE = 0.02     # m
SWAY_YAW = 0.08          # rad
SWAY_ROLL = 0.03
SWAY_PITCH = 0.02
SHOULDER_FLEXION = 0.35  # rad
SHOULDER_ABDUCTION = 0.10
ELBOW_REST = 0.2
ELBOW_SWING = 0.3
JUMP_HEIGHT = 0.25       # m, apex above the rest level
JUMP_PUSH = 0.25         # s, push-off and landing each
JUMP_PERIOD = 4.0        # s

# Arm geometry, segment key (owner, other)
ARM_SEGMENTS = {
    (0, 1): (-0.02, 0.15, -0.05),
    (1, 0): (0.0, 0.0, -0.14),
    (1, 2): (0.0, 0.0, 0.16),
    (2, 1): (0.0, 0.0, -0.13),
}

# value, first and second time derivative
Profile = tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass
class MotionSample:
    """Exact kinematics at a set of times; arrays are (n, N, ·). `a` is navigation-frame, `w`/`dw` body-frame."""
    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    q: np.ndarray
    w: np.ndarray
    dw: np.ndarray


def default_segments(model: ChainModel) -> dict[tuple[int, int], np.ndarray]:
    """Arm geometry where the keys match, a 15 cm hanging segment elsewhere."""
    out = {}
    for i, j in model.joints:
        for owner, other in ((i, j), (j, i)):
            if (owner, other) in ARM_SEGMENTS:
                out[(owner, other)] = np.array(ARM_SEGMENTS[(owner, other)])
            else:
                down = model.parent(other) == owner
                out[(owner, other)] = np.array([0.0, 0.0, 0.15 if down else -0.15])
    return out


def smoothstep(tau: np.ndarray) -> Profile:
    """Quintic 0→1 with zero first and second derivatives at both ends; derivatives are in τ."""
    tau = np.clip(tau, 0.0, 1.0)
    m = tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau ** 2)
    dm = 30.0 * tau ** 2 * (1.0 - tau) ** 2
    ddm = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau)
    return m, dm, ddm


def modulate(env: Profile, base: Profile) -> Profile:
    """Product rule up to the second derivative."""
    m, dm, ddm = env
    b, db, ddb = base
    return m * b, dm * b + m * db, ddm * b + 2.0 * dm * db + m * ddb


def _lever(R: np.ndarray, w: np.ndarray, dw: np.ndarray, l: np.ndarray) -> Profile:
    """A body-fixed vector l resolved in the navigation frame, with its rate and acceleration."""
    wl = np.cross(w, l)
    acc = np.cross(dw, l) + np.cross(w, wl)
    return (np.einsum("nij,j->ni", R, l),
            np.einsum("nij,nj->ni", R, wl),
            np.einsum("nij,nj->ni", R, acc))


class MotionModel:
    """Closed-form ground-truth kinematics for a scenario."""

    def __init__(
        self,
        model: ChainModel,
        cfg: ScenarioConfig,
        segments: dict[tuple[int, int], np.ndarray],
        rng: np.random.Generator | None = None,
    ):
        self.model = model
        self.cfg = cfg
        self.segments = {k: np.asarray(v, dtype=float) for k, v in segments.items()}
        self.t_a = cfg.standstill
        self.t_b = cfg.duration - cfg.standstill
        self.t_mid = 0.5 * (self.t_a + self.t_b)
        self.ramp = min(cfg.ramp_time, 0.5 * (self.t_b - self.t_a))
        self.walking = cfg.nominal_speed > 0.0
        self.static = cfg.is_static
        self.g = float(np.linalg.norm(model.gravity))
        self.takeoff_speed = self.g * (math.sqrt(JUMP_PUSH ** 2 / 12.0 + 2.0 * JUMP_HEIGHT / self.g) - 0.5 * JUMP_PUSH)
        self.flight_time = 2.0 * self.takeoff_speed / self.g
        self.jump_duration = 2.0 * JUMP_PUSH + self.flight_time
        self._play = self._draw_play(rng)

    # Envelope and path

    def envelope(self, t: np.ndarray) -> Profile:
        """Gait envelope m(t) with its derivatives: 0 at rest, 1 while cruising."""
        if self.static:
            return np.zeros_like(t), np.zeros_like(t), np.zeros_like(t)
        T = self.ramp
        up, dup, ddup = smoothstep((t - self.t_a) / T)
        down, ddown, dddown = smoothstep((self.t_b - t) / T)
        return (up * down,
                (dup * down - up * ddown) / T,
                (ddup * down - 2.0 * dup * ddown + up * dddown) / T ** 2)

    def distance(self, t: np.ndarray) -> Profile:
        """Travelled arc length s(t), speed and tangential acceleration under the raised-cosine profile."""
        V, T = self.cfg.nominal_speed, self.ramp
        if self.static or V == 0.0:
            return np.zeros_like(t), np.zeros_like(t), np.zeros_like(t)

        def ramp_dist(u):
            return 0.5 * V * (u - T / math.pi * np.sin(math.pi * u / T))

        def ramp_speed(u):
            return 0.5 * V * (1.0 - np.cos(math.pi * u / T))

        def ramp_accel(u):
            return 0.5 * V * math.pi / T * np.sin(math.pi * u / T)

        total = V * (self.t_b - self.t_a - T)
        u_up = np.clip(t - self.t_a, 0.0, T)
        u_down = np.clip(self.t_b - t, 0.0, T)
        cruise = np.clip(t - self.t_a - T, 0.0, self.t_b - self.t_a - 2.0 * T)
        braking = t >= self.t_b - T
        starting = t <= self.t_a + T
        resting = (t <= self.t_a) | (t >= self.t_b)

        s = np.where(braking, total - ramp_dist(u_down), ramp_dist(u_up) + V * cruise)
        speed = np.where(braking, ramp_speed(u_down), np.where(starting, ramp_speed(u_up), V))
        accel = np.where(braking, -ramp_accel(u_down), np.where(starting, ramp_accel(u_up), 0.0))
        s = np.where(t <= self.t_a, 0.0, np.where(t >= self.t_b, total, s))
        return s, np.where(resting, 0.0, speed), np.where(resting, 0.0, accel)

    def travel(self) -> float:
        """Total arc length of the base link over the run."""
        s, _, _ = self.distance(np.array([self.cfg.duration]))
        return float(s[0])

    def _path(self, s: Profile):
        """Horizontal position, velocity and acceleration plus path heading (with derivatives) from arc length."""
        s, ds, dds = s
        if self.cfg.path == PathShape.O_SHAPE:
            r = self.cfg.loop_radius
            psi = s / r
            sn, cs = np.sin(psi), np.cos(psi)
            pos = np.stack([r * sn, r * (1.0 - cs)], axis=-1)
            vel = np.stack([ds * cs, ds * sn], axis=-1)
            acc = np.stack([dds * cs - ds ** 2 * sn / r, dds * sn + ds ** 2 * cs / r], axis=-1)
            return pos, vel, acc, (psi, ds / r, dds / r)
        zero = np.zeros_like(s)
        pos = np.stack([s, zero], axis=-1)
        vel = np.stack([ds, zero], axis=-1)
        acc = np.stack([dds, zero], axis=-1)
        return pos, vel, acc, (zero, zero, zero)

    # Vertical motion, up positive

    def _push(self, s: np.ndarray) -> Profile:
        """Quartic push-off from rest: zero height, rate and acceleration at s = 0, takeoff speed and -g at the end."""
        T, v0, g = JUMP_PUSH, self.takeoff_speed, self.g
        c3 = g / (3.0 * T) + v0 / T ** 2
        c4 = -(v0 + 0.5 * g * T) / (2.0 * T ** 3)
        return (c3 * s ** 3 + c4 * s ** 4,
                3.0 * c3 * s ** 2 + 4.0 * c4 * s ** 3,
                6.0 * c3 * s + 12.0 * c4 * s ** 2)

    def _jump(self, s: np.ndarray) -> Profile:
        """One jump, s measured from the start of the push-off."""
        T, v0, g = JUMP_PUSH, self.takeoff_speed, self.g
        h0 = g * T ** 2 / 12.0 + 0.5 * v0 * T
        D = self.jump_duration
        push = self._push(np.clip(s, 0.0, T))
        land = self._push(np.clip(D - s, 0.0, T))
        u = np.clip(s - T, 0.0, self.flight_time)
        in_push = (s > 0.0) & (s < T)
        in_flight = (s >= T) & (s <= T + self.flight_time)
        in_landing = (s > T + self.flight_time) & (s < D)
        h = np.where(in_push, push[0], np.where(in_flight, h0 + v0 * u - 0.5 * g * u ** 2,
                                                np.where(in_landing, land[0], 0.0)))
        dh = np.where(in_push, push[1], np.where(in_flight, v0 - g * u, np.where(in_landing, -land[1], 0.0)))
        ddh = np.where(in_push, push[2], np.where(in_flight, -g, np.where(in_landing, land[2], 0.0)))
        return h, dh, ddh

    def _height(self, t: np.ndarray, env: Profile) -> Profile:
        """Height above the rest level with its derivatives."""
        h, dh, ddh = np.zeros_like(t), np.zeros_like(t), np.zeros_like(t)
        if self.walking:
            w = 2.0 * math.pi * STEP_FREQ
            arg = w * (t - self.t_mid)
            bob = (0.5 * (1.0 - np.cos(arg)), 0.5 * w * np.sin(arg), 0.5 * w ** 2 * np.cos(arg))
            b, db, ddb = modulate(env, bob)
            h, dh, ddh = h + BOB_AMPLITUDE * b, dh + BOB_AMPLITUDE * db, ddh + BOB_AMPLITUDE * ddb
        if self.cfg.kind == ScenarioKind.JUMP and not self.static:
            for t_j in self.jump_times():
                j, dj, ddj = self._jump(t - t_j)
                h, dh, ddh = h + j, dh + dj, ddh + ddj
        return h, dh, ddh

    def jump_times(self) -> list[float]:
        """Push-off start of every jump."""
        start = self.t_a + self.ramp + 2.0
        stop = self.t_b - self.ramp - self.jump_duration
        if stop < start:
            return []
        return list(np.arange(start, stop, JUMP_PERIOD))

    # Attitude profiles, ZYX angles [yaw, pitch, roll] with their derivatives

    def _wave(self, t: np.ndarray, env: Profile, amp: float, freq: float, phase: float = 0.0) -> Profile:
        w = 2.0 * math.pi * freq
        arg = w * (t - self.t_mid) + phase
        base = (np.sin(arg), w * np.cos(arg), -w ** 2 * np.sin(arg))
        x, dx, ddx = modulate(env, base)
        return amp * x, amp * dx, amp * ddx

    @staticmethod
    def _stack(*profiles: Profile) -> Profile:
        return tuple(np.stack([p[i] for p in profiles], axis=-1) for i in range(3))

    def _base_angles(self, t: np.ndarray, env: Profile, heading: Profile) -> Profile:
        gait = 1.0 if self.walking else 0.0
        sway = self._wave(t, env, gait * SWAY_YAW, STRIDE_FREQ)
        yaw = tuple(h + s for h, s in zip(heading, sway))
        pitch = self._wave(t, env, gait * SWAY_PITCH, STEP_FREQ, 0.5 * math.pi)
        roll = self._wave(t, env, gait * SWAY_ROLL, STRIDE_FREQ)
        return self._stack(yaw, pitch, roll)

    def _relative_angles(self, depth: int, t: np.ndarray, env: Profile) -> Profile:
        swing = self.cfg.arm_swing_scale
        zero = (np.zeros_like(t),) * 3
        if depth == 1:
            pitch = self._wave(t, env, -swing * SHOULDER_FLEXION, STRIDE_FREQ)
            roll = self._wave(t, env, swing * SHOULDER_ABDUCTION, STRIDE_FREQ)
        else:
            x, dx, ddx = self._wave(t, env, swing * ELBOW_SWING, STRIDE_FREQ)
            pitch, roll = (x + ELBOW_REST, dx, ddx), zero
        return self._stack(zero, pitch, roll)

    # Joint play

    def _draw_play(self, rng):
        sd = self.cfg.joint_play_sd
        if sd <= 0.0 or rng is None:
            return {}
        play = {}
        for k in range(self.model.n_links):
            if self.model.parent(k) is None:
                continue
            amps = rng.normal(size=(3, 3))
            amps *= sd * math.sqrt(2.0) / np.linalg.norm(amps, axis=0, keepdims=True)
            freqs = rng.uniform(0.2, 0.8, size=(3, 1))
            phases = rng.uniform(0.0, 2.0 * math.pi, size=(3, 3))
            play[k] = (amps, freqs, phases)
        return play

    def _play_offset(self, k: int, t: np.ndarray) -> Profile:
        amps, freqs, phases = self._play[k]
        w = 2.0 * math.pi * freqs[None]
        arg = w * t[:, None, None] + phases[None]
        return (np.sum(amps[None] * np.sin(arg), axis=1),
                np.sum(amps[None] * w * np.cos(arg), axis=1),
                -np.sum(amps[None] * w ** 2 * np.sin(arg), axis=1))

    # Evaluation

    def evaluate(self, t: np.ndarray) -> MotionSample:
        """Exact kinematics of every link at the given times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n, N = t.shape[0], self.model.n_links
        p, v, a = np.zeros((n, N, 3)), np.zeros((n, N, 3)), np.zeros((n, N, 3))
        w, dw = np.zeros((n, N, 3)), np.zeros((n, N, 3))
        q = np.zeros((n, N, 4))

        env = self.envelope(t)
        pos_h, vel_h, acc_h, heading = self._path(self.distance(t))
        h, dh, ddh = self._height(t, env)

        root = self.model.camera_link
        p[:, root, :2], v[:, root, :2], a[:, root, :2] = pos_h, vel_h, acc_h
        p[:, root, 2], v[:, root, 2], a[:, root, 2] = -h, -dh, -ddh
        angles, rates, accels = self._base_angles(t, env, heading)
        q[:, root] = euler_to_quat(angles[:, 0], angles[:, 1], angles[:, 2])
        w[:, root] = euler_rates_to_body(angles, rates)
        dw[:, root] = euler_accels_to_body(angles, rates, accels)

        for k in self.model.traversal_order():
            parent = self.model.parent(k)
            if parent is None:
                continue
            rel, drel, ddrel = self._relative_angles(self.model.depth(k), t, env)
            q_rel = euler_to_quat(rel[:, 0], rel[:, 1], rel[:, 2])
            R_rel = quat_to_dcm(q_rel)
            w_in = np.einsum("nji,nj->ni", R_rel, w[:, parent])
            w_rel = euler_rates_to_body(rel, drel)
            q[:, k] = quat_mul(q[:, parent], q_rel)
            w[:, k] = w_in + w_rel
            dw[:, k] = (np.einsum("nji,nj->ni", R_rel, dw[:, parent]) + np.cross(w_in, w_rel)
                        + euler_accels_to_body(rel, drel, ddrel))

            # joint centre reached from both sides
            out = _lever(quat_to_dcm(q[:, parent]), w[:, parent], dw[:, parent], self.segments[(parent, k)])
            back = _lever(quat_to_dcm(q[:, k]), w[:, k], dw[:, k], self.segments[(k, parent)])
            p[:, k] = p[:, parent] + out[0] - back[0]
            v[:, k] = v[:, parent] + out[1] - back[1]
            a[:, k] = a[:, parent] + out[2] - back[2]
            if k in self._play:
                d, dd, ddd = self._play_offset(k, t)
                p[:, k] += d
                v[:, k] += dd
                a[:, k] += ddd
        return MotionSample(t=t, p=p, v=v, a=a, q=q, w=w, dw=dw)

    def specific_force(self, sample: MotionSample) -> np.ndarray:
        """Body-frame specific force f = Rᵀ(a − g) of every link."""
        return np.einsum("nkji,nkj->nki", quat_to_dcm(sample.q), sample.a - self.model.gravity)

    def stationary(self, t: np.ndarray) -> np.ndarray:
        """True outside the motion interval, or always for a zero-motion scenario."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.static:
            return np.ones_like(t, dtype=bool)
        return (t <= self.t_a) | (t >= self.t_b)
