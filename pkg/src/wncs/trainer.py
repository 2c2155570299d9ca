"""Joint training of estimator, controller, and scheduler over lossy links.

One simulation slot runs the full pipeline: channels fade, the scheduler
decides whether the sensor transmits, the controller acts on the measurement
or on the estimator's prediction, the downlink applies or zeroes the command,
the plant advances, and every agent takes one gradient step. Transitions need
the next slot's observation, so each is held for one slot before it enters
its replay buffer.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import nn
from .config import (ExperimentConfig, make_channel, make_plant,
                     serialize_config, validate_config)
from .controller import Td3Controller, expected_reward, stack_controller_batch
from .estimator import EstimatorBuffer, HistoryWindow, StateEstimator
from .replay import RankedBuffer
from .scheduler import DqnScheduler, stack_scheduler_batch
from .seeding import stream

METRICS_COLUMNS = ("scenario", "variant", "seed", "step", "mean_return",
                   "std_return", "mean_aoi", "tx_rate", "estimator_loss",
                   "critic_loss", "scheduler_loss")


def step_aoi(prev: int, received: bool) -> int:
    """Slots since the last delivered measurement: 0 on receipt."""
    if prev < 0:
        raise ValueError(f"age must be non-negative, got {prev}")
    return 0 if received else prev + 1


def select_observation(received: bool, measurement: np.ndarray,
                       estimate: np.ndarray) -> np.ndarray:
    """The controller's input: the measurement when delivered, else the
    estimate (a zero vector in the model-free fallback)."""
    return measurement if received else estimate


def overall_reward(control_reward: float, tx_action: int,
                   tx_cost: float) -> float:
    """Control reward net of the per-transmission communication cost."""
    if tx_cost < 0:
        raise ValueError(f"transmission cost must be non-negative, got "
                         f"{tx_cost}")
    return control_reward - tx_cost * tx_action


@dataclass
class ControllerTransition:
    obs: np.ndarray
    hist: np.ndarray
    act: np.ndarray
    reward: float
    obs_next: np.ndarray
    hist_next: np.ndarray
    aoi: int = 0
    aoi_next: int = 0

    @property
    def aoi_sum(self) -> int:
        return self.aoi + self.aoi_next


@dataclass
class SchedulerTransition:
    obs: np.ndarray
    hist: np.ndarray
    act: int
    reward: float
    obs_next: np.ndarray
    hist_next: np.ndarray
    aoi: int = 0
    aoi_next: int = 0

    @property
    def aoi_sum(self) -> int:
        return self.aoi + self.aoi_next


# Sub-slot orderings. The low-mobility loop always transmits and only
# consults the estimator after the uplink outcome is known; the joint loop
# predicts first because the scheduler's input needs the estimate.
_SLOT_ORDER_LOW = ("t", "up_state", "down_state", "tx_action", "up_ok",
                   "received", "estimate", "obs_used", "aoi", "action",
                   "down_ok", "u_applied", "expected_rew", "total_rew",
                   "q_reward")
_SLOT_ORDER_HIGH = ("t", "up_state", "down_state", "estimate", "tx_action",
                    "up_ok", "received", "obs_used", "aoi", "action",
                    "down_ok", "u_applied", "expected_rew", "total_rew",
                    "q_reward")


class SlotContext:
    """Per-slot record whose fields only accept assignment in sub-slot order.

    Writing a field that precedes one already written raises, so any code
    path that consults a signal before the pipeline produces it cannot even
    record it. Optional fields may be skipped.
    """

    def __init__(self, t: int, mode: str = "low"):
        order = _SLOT_ORDER_HIGH if mode == "high" else _SLOT_ORDER_LOW
        object.__setattr__(self, "_index", {n: i for i, n in
                                            enumerate(order)})
        object.__setattr__(self, "_last", -1)
        self.t = t

    def __setattr__(self, name, value):
        idx = self._index.get(name)
        if idx is None:
            raise AttributeError(f"unknown slot field {name!r}")
        if idx <= self._last:
            raise RuntimeError(f"slot field {name!r} assigned out of "
                               f"sub-slot order")
        object.__setattr__(self, "_last", idx)
        object.__setattr__(self, name, value)

    def get(self, name, default=None):
        return self.__dict__.get(name, default)


@dataclass
class EvalResult:
    mean_return: float
    std_return: float
    mean_discounted: float
    mean_aoi: float
    tx_rate: float


class CodesignRunner:
    """Owns one plant, its channels, the three agents, and their replay."""

    def __init__(self, cfg: ExperimentConfig, seed: int, out_dir=None):
        validate_config(cfg)
        self.cfg = cfg
        self.seed = int(seed)
        self.out_dir = str(out_dir) if out_dir is not None else None
        self.high = cfg.mode == "high"

        self.plant = make_plant(cfg.plant)
        self.uplink = make_channel(cfg.uplink)
        self.downlink = make_channel(cfg.downlink)
        if not self.high and (self.uplink.n_states != 1
                              or self.downlink.n_states != 1):
            raise ValueError("low-mobility mode requires static single-state "
                             "channels")

        self._scale = np.asarray(self.plant.obs_scale, dtype=np.float32)
        n_s, n_u = self.plant.state_dim, self.plant.act_dim
        self._n_s, self._n_u = n_s, n_u
        m_up, m_dn = self.uplink.n_states, self.downlink.n_states
        self._m_up, self._m_dn = m_up, m_dn
        self.ctrl_obs_dim = n_s + (m_up + m_dn if self.high else 0) + 1
        self.sched_obs_dim = n_s + m_up + 1
        self.est_pair_dim = n_s + n_u

        self.use_estimator = cfg.replay_mode != "mf-uniform"
        self.use_scheduler = self.high and cfg.scheduler_mode != "none"
        self.ranked = cfg.replay_mode == "hybrid-aoi"

        s = self.seed
        self.rng_up = stream(s, "channel/uplink")
        self.rng_dn = stream(s, "channel/downlink")
        self.rng_noise = stream(s, "plant/noise")
        self.rng_reset = stream(s, "plant/reset")
        self.rng_expl = stream(s, "explore/controller")
        self.rng_sched = stream(s, "explore/scheduler")
        self.rng_smooth = stream(s, "explore/target-noise")
        self.rng_replay_ctrl = stream(s, "replay/controller")
        self.rng_replay_est = stream(s, "replay/estimator")
        self.rng_replay_sched = stream(s, "replay/scheduler")

        self.estimator = None
        if self.use_estimator:
            self.estimator = StateEstimator(
                obs_dim=n_s, pair_dim=self.est_pair_dim,
                history_len=cfg.history_len, hidden_dim=cfg.hidden_dim,
                lr=cfg.lr_estimator, rng=stream(s, "init/estimator"))
        self.controller = Td3Controller(
            obs_dim=self.ctrl_obs_dim, act_dim=n_u,
            history_len=cfg.history_len, hidden_dim=cfg.hidden_dim,
            gamma=cfg.gamma, tau=cfg.tau, n_target=cfg.n_target,
            lr_actor=cfg.lr_actor, lr_critic=cfg.lr_critic,
            expl_std=cfg.expl_std, rng=stream(s, "init/controller"),
            use_target_networks=not cfg.literal_targets,
            policy_noise=cfg.policy_noise, noise_clip=cfg.noise_clip)
        self.scheduler = None
        if self.use_scheduler:
            self.scheduler = DqnScheduler(
                obs_dim=self.sched_obs_dim, history_len=cfg.history_len,
                hidden_dim=cfg.hidden_dim, gamma=cfg.gamma,
                lr=cfg.lr_scheduler, n_hard=cfg.n_hard_target,
                epsilon=cfg.epsilon, rng=stream(s, "init/scheduler"),
                use_target_network=not cfg.literal_targets)

        self.ctrl_buf = RankedBuffer(cfg.controller_buffer, cfg.alpha,
                                     cfg.weight_mode)
        self.est_buf = None
        if self.use_estimator:
            self.est_buf = EstimatorBuffer(cfg.estimator_buffer,
                                           cfg.history_len,
                                           self.est_pair_dim, n_s)
        self.sched_buf = None
        if self.use_scheduler:
            self.sched_buf = RankedBuffer(cfg.scheduler_buffer, cfg.alpha,
                                          cfg.weight_mode)
        self.n_sort = cfg.n_sort if cfg.n_sort > 0 else cfg.controller_buffer

        self.h_est = HistoryWindow(self.est_pair_dim, cfg.history_len) \
            if self.use_estimator else None
        self.h_ctrl = HistoryWindow(self.ctrl_obs_dim + n_u, cfg.history_len)
        self.h_sched = HistoryWindow(self.sched_obs_dim + 1,
                                     cfg.history_len) \
            if self.use_scheduler else None

        self.pretrain_steps = int(cfg.total_steps * cfg.pretrain_frac) \
            if self.use_scheduler else 0

        self.state = self.plant.reset(self.rng_reset)
        self.aoi = 0  # age going INTO the next slot (previous slot's value)
        self.slot = 0
        self._pending_ctrl = None
        self._pending_sched = None
        self._pending_est = None
        self._loss_sums = {"estimator": 0.0, "critic": 0.0, "scheduler": 0.0}
        self._loss_counts = {"estimator": 0, "critic": 0, "scheduler": 0}
        self.trace = [] if cfg.trace else None

    # ------------------------------------------------------------------
    @property
    def variant(self) -> str:
        if not self.high:
            return self.cfg.replay_mode
        return f"sched-{self.cfg.scheduler_mode}"

    def _one_hot(self, idx: int, size: int) -> np.ndarray:
        v = np.zeros(size, dtype=np.float32)
        v[idx] = 1.0
        return v

    def _aoi_feature(self, aoi: int) -> float:
        return min(aoi, self.cfg.aoi_cap) / self.cfg.aoi_cap

    def _ctrl_features(self, obs_raw, up_state, down_state,
                       aoi) -> np.ndarray:
        parts = [np.asarray(obs_raw, dtype=np.float32) / self._scale]
        if self.high:
            parts.append(self._one_hot(up_state, self._m_up))
            parts.append(self._one_hot(down_state, self._m_dn))
        parts.append(np.array([self._aoi_feature(aoi)], dtype=np.float32))
        return np.concatenate(parts)

    def _sched_features(self, estimate_raw, up_state,
                        prev_aoi) -> np.ndarray:
        return np.concatenate([
            np.asarray(estimate_raw, dtype=np.float32) / self._scale,
            self._one_hot(up_state, self._m_up),
            np.array([self._aoi_feature(prev_aoi)], dtype=np.float32),
        ])

    def _predict(self) -> np.ndarray:
        return self.estimator.predict(self.h_est.array()).astype(np.float64)

    def _log_loss(self, key: str, value: float):
        self._loss_sums[key] += value
        self._loss_counts[key] += 1

    # ------------------------------------------------------------------
    def _slot(self):
        cfg = self.cfg
        self.slot += 1
        t = self.slot
        sched_on = self.scheduler is not None and t > self.pretrain_steps
        # until the scheduler is active the estimator is consulted lazily,
        # which follows the always-transmit sub-slot order
        ctx = SlotContext(t, mode="high" if sched_on else "low")

        # Channels fade first; delivery coins and measurement noise are
        # drawn in lockstep each slot so paired seeds share realizations
        # across variants, and consumed only where the pipeline permits.
        ctx.up_state = self.uplink.advance(self.rng_up)
        ctx.down_state = self.downlink.advance(self.rng_dn)
        up_ok = self.uplink.draw_success(self.rng_up)
        dn_ok = self.downlink.draw_success(self.rng_dn)
        o_meas = self.plant.measure(self.state, self.rng_noise)

        o_hat = None
        o_sched = None
        h_sched = None
        if sched_on:
            o_hat = self._predict()
            ctx.estimate = o_hat
            o_sched = self._sched_features(o_hat, ctx.up_state, self.aoi)
            h_sched = self.h_sched.array()
            a_tx = self.scheduler.schedule(o_sched, h_sched,
                                           rng=self.rng_sched, explore=True)
        else:
            a_tx = 1
        ctx.tx_action = a_tx

        ctx.up_ok = up_ok
        received = bool(a_tx) and up_ok
        ctx.received = received
        if not received and self.use_estimator and o_hat is None:
            o_hat = self._predict()
            ctx.estimate = o_hat
        if self.use_estimator:
            fallback = o_hat if o_hat is not None \
                else np.zeros(self._n_s)
        else:
            fallback = np.zeros(self._n_s)
        o_used = select_observation(received, o_meas, fallback)
        ctx.obs_used = o_used
        aoi_now = step_aoi(self.aoi, received)
        ctx.aoi = aoi_now
        o_ctrl = self._ctrl_features(o_used, ctx.up_state, ctx.down_state,
                                     aoi_now)
        h_ctrl = self.h_ctrl.array()

        # pending transitions gain their successor observation this slot
        if self._pending_ctrl is not None:
            p = self._pending_ctrl
            tr = ControllerTransition(obs=p[0], hist=p[1], act=p[2],
                                      reward=p[3], obs_next=o_ctrl,
                                      hist_next=h_ctrl, aoi=p[4],
                                      aoi_next=aoi_now)
            self.ctrl_buf.insert_front(tr, tr.aoi_sum)
        if self._pending_sched is not None and o_sched is not None:
            p = self._pending_sched
            tr = SchedulerTransition(obs=p[0], hist=p[1], act=p[2],
                                     reward=p[3], obs_next=o_sched,
                                     hist_next=h_sched, aoi=p[4],
                                     aoi_next=self.aoi)
            self.sched_buf.insert_front(tr, tr.aoi_sum)
            self._pending_sched = None
        if self._pending_est is not None:
            if received:
                self.est_buf.add(*self._pending_est)
            self._pending_est = None

        y = self.controller.act(o_ctrl, h_ctrl, rng=self.rng_expl,
                                explore=True)
        ctx.action = y
        ctx.down_ok = dn_ok
        rho_d = 1.0 if dn_ok else 0.0
        u_cmd = self.plant.u_max * np.asarray(y, dtype=np.float64)
        u_applied = rho_d * u_cmd
        ctx.u_applied = u_applied

        r_bar = expected_reward(self.plant.reward, np.asarray(o_used,
                                                              dtype=float),
                                u_cmd, self.downlink.dropout())
        ctx.expected_rew = r_bar
        r_total = overall_reward(r_bar, a_tx, cfg.tx_cost) if self.high \
            else r_bar
        ctx.total_rew = r_total

        u_norm = np.float32(rho_d) * y
        if sched_on:
            if cfg.scheduler_mode == "q-value":
                sched_rew = self.controller.q1_value(o_ctrl, h_ctrl, u_norm)
            else:
                sched_rew = r_total
            ctx.q_reward = sched_rew
            self._pending_sched = (o_sched, h_sched, a_tx, sched_rew,
                                   self.aoi)

        # estimator pairs: the label must be a real measurement
        if self.use_estimator:
            h_est = self.h_est.array()
            if received:
                label = np.asarray(o_meas, dtype=np.float32)
                if cfg.strict_estimator_pairs:
                    self._pending_est = (h_est, label)
                else:
                    self.est_buf.add(h_est, label)

        self._pending_ctrl = (o_ctrl, h_ctrl, y.copy(), r_total, aoi_now)

        self.state = self.plant.step(self.state, u_applied)

        # histories roll at slot end
        if self.use_estimator:
            self.h_est.push(np.concatenate([o_ctrl[:self._n_s], u_norm]))
        self.h_ctrl.push(np.concatenate([o_ctrl, u_norm]))
        if sched_on:
            self.h_sched.push(np.concatenate([o_sched,
                                              np.array([a_tx],
                                                       dtype=np.float32)]))
        self.aoi = aoi_now

        # one gradient step per agent per slot, with a periodic resort of
        # the ranked buffers
        if self.ranked and t % self.n_sort == 0:
            self.ctrl_buf.resort()
            if self.sched_buf is not None:
                self.sched_buf.resort()
        if self.use_estimator and len(self.est_buf) > 0:
            h_b, o_b = self.est_buf.sample(cfg.batch_estimator,
                                           self.rng_replay_est)
            self._log_loss("estimator", self.estimator.train_step(h_b, o_b))
        if len(self.ctrl_buf) > 0:
            if self.ranked:
                items, uids, w = self.ctrl_buf.sample(cfg.batch_controller,
                                                      self.rng_replay_ctrl)
            else:
                items, uids, w = self.ctrl_buf.sample_uniform(
                    cfg.batch_controller, self.rng_replay_ctrl)
            batch = stack_controller_batch(items)
            td1, closs = self.controller.update(batch, w,
                                                rng=self.rng_smooth)
            if self.ranked:
                self.ctrl_buf.update_values(uids, td1)
            self._log_loss("critic", closs)
        if sched_on and len(self.sched_buf) > 0:
            if self.ranked:
                items, uids, w = self.sched_buf.sample(
                    cfg.batch_scheduler, self.rng_replay_sched)
            else:
                items, uids, w = self.sched_buf.sample_uniform(
                    cfg.batch_scheduler, self.rng_replay_sched)
            batch = stack_scheduler_batch(items)
            td, sloss = self.scheduler.update(batch, w)
            if self.ranked:
                self.sched_buf.update_values(uids, td)
            self._log_loss("scheduler", sloss)

        if self.trace is not None:
            self.trace.append(ctx)

    def _reset_episode(self):
        self.state = self.plant.reset(self.rng_reset)
        self.aoi = 0
        if self.h_est is not None:
            self.h_est.reset()
        self.h_ctrl.reset()
        if self.h_sched is not None:
            self.h_sched.reset()

    # ------------------------------------------------------------------
    def evaluate(self, at_step: int, episodes: int | None = None) \
            -> EvalResult:
        """Greedy rollouts scored on the true plant state.

        Exploration is disabled; channels continue from their current
        fading states via clones so training is not perturbed.
        """
        cfg = self.cfg
        episodes = cfg.eval_episodes if episodes is None else episodes
        rng = stream(self.seed, f"eval/{at_step}")
        up, dn = self.uplink.clone(), self.downlink.clone()
        sched_on = self.scheduler is not None \
            and at_step > self.pretrain_steps
        h_est = HistoryWindow(self.est_pair_dim, cfg.history_len) \
            if self.use_estimator else None
        h_ctrl = HistoryWindow(self.ctrl_obs_dim + self._n_u,
                               cfg.history_len)
        h_sched = HistoryWindow(self.sched_obs_dim + 1, cfg.history_len) \
            if sched_on else None

        returns, disc_returns = [], []
        aoi_total = 0
        tx_total = 0
        slots = 0
        for _ in range(episodes):
            state = self.plant.reset(rng)
            for w in (h_est, h_ctrl, h_sched):
                if w is not None:
                    w.reset()
            aoi_prev = 0
            ret = 0.0
            dret = 0.0
            g = 1.0
            for _k in range(cfg.episode_len):
                b_up = up.advance(rng)
                b_dn = dn.advance(rng)
                up_ok = up.draw_success(rng)
                dn_ok = dn.draw_success(rng)
                o_meas = self.plant.measure(state, rng)
                o_hat = None
                o_sched = None
                if sched_on:
                    o_hat = self.estimator.predict(h_est.array()) \
                        .astype(np.float64)
                    o_sched = self._sched_features(o_hat, b_up, aoi_prev)
                    a_tx = self.scheduler.schedule(o_sched, h_sched.array(),
                                                   explore=False)
                else:
                    a_tx = 1
                received = bool(a_tx) and up_ok
                if not received and self.use_estimator and o_hat is None:
                    o_hat = self.estimator.predict(h_est.array()) \
                        .astype(np.float64)
                fallback = o_hat if o_hat is not None \
                    else np.zeros(self._n_s)
                o_used = select_observation(received, o_meas, fallback)
                aoi_now = step_aoi(aoi_prev, received)
                o_ctrl = self._ctrl_features(o_used, b_up, b_dn, aoi_now)
                y = self.controller.act(o_ctrl, h_ctrl.array(),
                                        explore=False)
                rho_d = 1.0 if dn_ok else 0.0
                u = rho_d * self.plant.u_max * np.asarray(y,
                                                          dtype=np.float64)
                r = self.plant.reward(state, u)
                r_step = r - cfg.tx_cost * a_tx if self.high else r
                ret += r_step
                dret += g * r_step
                g *= cfg.gamma
                state = self.plant.step(state, u)
                u_norm = np.float32(rho_d) * y
                if self.use_estimator:
                    h_est.push(np.concatenate([o_ctrl[:self._n_s], u_norm]))
                h_ctrl.push(np.concatenate([o_ctrl, u_norm]))
                if sched_on:
                    h_sched.push(np.concatenate(
                        [o_sched, np.array([a_tx], dtype=np.float32)]))
                aoi_total += aoi_now
                tx_total += a_tx
                slots += 1
                aoi_prev = aoi_now
            returns.append(ret)
            disc_returns.append(dret)
        return EvalResult(
            mean_return=float(np.mean(returns)) if returns else 0.0,
            std_return=float(np.std(returns)) if returns else 0.0,
            mean_discounted=float(np.mean(disc_returns))
            if disc_returns else 0.0,
            mean_aoi=aoi_total / slots if slots else 0.0,
            tx_rate=tx_total / slots if slots else 0.0)

    # ------------------------------------------------------------------
    def _metrics_row(self, t: int) -> dict:
        res = self.evaluate(t)

        def flush(key):
            count = self._loss_counts[key]
            value = self._loss_sums[key] / count if count else float("nan")
            self._loss_sums[key] = 0.0
            self._loss_counts[key] = 0
            return value

        return {
            "scenario": self.cfg.scenario,
            "variant": self.variant,
            "seed": self.seed,
            "step": t,
            "mean_return": res.mean_return,
            "std_return": res.std_return,
            "mean_aoi": res.mean_aoi,
            "tx_rate": res.tx_rate,
            "estimator_loss": flush("estimator"),
            "critic_loss": flush("critic"),
            "scheduler_loss": flush("scheduler"),
        }

    def run(self, on_row=None) -> list[dict]:
        """Train for total_steps slots; returns the evaluation rows.

        `on_row`, when given, is called with each evaluation row as it
        is produced (for progress reporting).
        """
        cfg = self.cfg
        rows = []
        csv_path = None
        if self.out_dir is not None:
            os.makedirs(self.out_dir, exist_ok=True)
            csv_path = os.path.join(self.out_dir, "metrics.csv")
            with open(csv_path, "w", encoding="utf-8") as fh:
                fh.write(",".join(METRICS_COLUMNS) + "\n")
        for t in range(1, cfg.total_steps + 1):
            self._slot()
            if t % cfg.eval_every == 0 or t == cfg.total_steps:
                row = self._metrics_row(t)
                rows.append(row)
                if csv_path is not None:
                    with open(csv_path, "a", encoding="utf-8") as fh:
                        fh.write(format_metrics_row(row) + "\n")
                if on_row is not None:
                    on_row(row)
            if t % cfg.episode_len == 0:
                self._reset_episode()
        if self.out_dir is not None:
            self.save_checkpoint(os.path.join(self.out_dir, "checkpoint"),
                                 final_row=rows[-1] if rows else None)
        return rows

    # ------------------------------------------------------------------
    def save_checkpoint(self, dir_path: str, final_row: dict | None = None):
        os.makedirs(dir_path, exist_ok=True)
        ctrl = self.controller
        nn.save_params(os.path.join(dir_path, "actor.bin"), ctrl.actor,
                       nn.spec_meta(ctrl.actor_spec))
        nn.save_params(os.path.join(dir_path, "critic1.bin"), ctrl.critic1,
                       nn.spec_meta(ctrl.critic_spec))
        nn.save_params(os.path.join(dir_path, "critic2.bin"), ctrl.critic2,
                       nn.spec_meta(ctrl.critic_spec))
        if self.estimator is not None:
            nn.save_params(os.path.join(dir_path, "estimator.bin"),
                           self.estimator.params,
                           nn.spec_meta(self.estimator.spec))
        if self.scheduler is not None:
            nn.save_params(os.path.join(dir_path, "scheduler.bin"),
                           self.scheduler.params,
                           nn.spec_meta(self.scheduler.spec))
        meta = {
            "schema": 1,
            "seed": self.seed,
            "step": self.slot,
            "scenario": self.cfg.scenario,
            "variant": self.variant,
            "uplink_state": self.uplink.state,
            "downlink_state": self.downlink.state,
            "config": serialize_config(self.cfg),
        }
        if final_row is not None:
            meta["final_metrics"] = {k: (None if isinstance(v, float)
                                         and np.isnan(v) else v)
                                     for k, v in final_row.items()}
        with open(os.path.join(dir_path, "meta.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)

    def load_checkpoint(self, dir_path: str):
        """Restore network parameters and channel states from a directory."""
        ctrl = self.controller
        for name, params in (("actor", ctrl.actor),
                             ("critic1", ctrl.critic1),
                             ("critic2", ctrl.critic2)):
            loaded, _ = nn.load_params(os.path.join(dir_path,
                                                    f"{name}.bin"))
            for key in params:
                np.copyto(params[key], loaded[key])
        nn.hard_copy(ctrl.actor_target, ctrl.actor)
        nn.hard_copy(ctrl.critic1_target, ctrl.critic1)
        nn.hard_copy(ctrl.critic2_target, ctrl.critic2)
        if self.estimator is not None:
            loaded, _ = nn.load_params(os.path.join(dir_path,
                                                    "estimator.bin"))
            for key in self.estimator.params:
                np.copyto(self.estimator.params[key], loaded[key])
        if self.scheduler is not None:
            loaded, _ = nn.load_params(os.path.join(dir_path,
                                                    "scheduler.bin"))
            for key in self.scheduler.params:
                np.copyto(self.scheduler.params[key], loaded[key])
            nn.hard_copy(self.scheduler.target, self.scheduler.params)
        meta_path = os.path.join(dir_path, "meta.json")
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
        self.uplink.state = int(meta["uplink_state"])
        self.downlink.state = int(meta["downlink_state"])
        self.slot = int(meta["step"])
        return meta


def format_metrics_row(row: dict) -> str:
    parts = []
    for col in METRICS_COLUMNS:
        v = row[col]
        parts.append(repr(v) if isinstance(v, float) else str(v))
    return ",".join(parts)


def run_low_mobility(cfg: ExperimentConfig, seed: int,
                     out_dir=None) -> list[dict]:
    if cfg.mode != "low":
        raise ValueError(f"expected a low-mobility config, got mode "
                         f"{cfg.mode!r}")
    return CodesignRunner(cfg, seed, out_dir=out_dir).run()


def run_high_mobility(cfg: ExperimentConfig, seed: int,
                      out_dir=None) -> list[dict]:
    if cfg.mode != "high":
        raise ValueError(f"expected a high-mobility config, got mode "
                         f"{cfg.mode!r}")
    return CodesignRunner(cfg, seed, out_dir=out_dir).run()
