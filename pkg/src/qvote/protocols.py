"""End-to-end protocol runs, transcript logging, and classical baselines.

A run consumes a seeded generator and optionally appends events to a
Transcript. Events never contain plaintext choices, only salted
commitments, so a persisted transcript does not reveal votes; the salt
is derived from the master seed and is not serialized.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .ballots import (
    CHEAT_DETECTED,
    BallotConfig,
    Scheme,
    TWO_VOTER_TB_LABELS,
    Vote,
    cast_vote_db,
    decode_db,
    decode_tb,
    prepare_db_ballot,
    prepare_tb_ballot,
    shift_unitary,
    solve_tally,
)
from .errors import ConfigurationError
from .qstate import INVALID, CorrelatedState, apply_local, _sample

EVENT_STEPS = ("PREPARE", "DISTRIBUTE", "VOTE", "RETURN", "MEASURE")


@dataclass
class Transcript:
    """Ordered protocol events plus the run's identifying metadata."""

    run_id: str
    master_seed: int
    config: dict
    events: list[dict] = field(default_factory=list)
    result: dict | None = None

    def __post_init__(self):
        self._salt = rngmod.stream(self.master_seed, rngmod.COMMITMENT).bytes(16)

    def commit(self, rep: int, site: int, value) -> str:
        """Salted commitment hiding a vote value in the event log."""
        msg = self._salt + f"{self.run_id}|{rep}|{site}|{value}".encode()
        return hashlib.sha256(msg).hexdigest()

    def event(self, rep: int, step: str, site=None, payload=None, outcome=None):
        if step not in EVENT_STEPS:
            raise ConfigurationError(f"unknown transcript step {step!r}")
        self.events.append({
            "run_id": self.run_id,
            "rep": int(rep),
            "step": step,
            "site": site if site is None else int(site),
            "payload": payload,
            "outcome": outcome,
        })

    def validate(self):
        reps = {}
        for e in self.events:
            if e["step"] == "MEASURE":
                reps[e["rep"]] = reps.get(e["rep"], 0) + 1
        for rep, count in reps.items():
            if count != 1:
                raise ConfigurationError(f"repetition {rep} has {count} MEASURE events")

    def jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n"
                       for e in self.events)

    def write(self, path):
        self.validate()
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.jsonl())


def load_transcript_events(path) -> list[dict]:
    """Parse a transcript JSONL file; reports every corrupt line."""
    events, bad = [], []
    with open(path, "r", encoding="utf-8") as f:
        lines = f.readlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            bad.append(lineno)
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict) or "step" not in obj or "rep" not in obj:
                raise ValueError("not an event object")
            events.append(obj)
        except ValueError:
            bad.append(lineno)
    if bad:
        raise ConfigurationError(
            f"corrupt transcript lines: {', '.join(str(b) for b in bad)}")
    if not events:
        raise ConfigurationError("transcript is empty")
    return events


@dataclass
class RunResult:
    """Decoded tally plus per-repetition detail."""

    scheme: str
    m: int | str
    outcomes: list
    p: list | None = None
    statistics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "m": self.m, "outcomes": self.outcomes,
                "p": self.p, "statistics": self.statistics}


def _parse_votes(config: BallotConfig, votes) -> list[Vote]:
    parsed = [Vote.parse(v) for v in votes]
    if len(parsed) != config.N:
        raise ConfigurationError(f"expected {config.N} votes, got {len(parsed)}")
    return parsed


def run_db_vote(config: BallotConfig, votes, rng: np.random.Generator,
                transcript: Transcript | None = None, stage_hook=None) -> RunResult:
    """Distributed-ballot round: the tally is the number of yes votes."""
    if config.scheme is not Scheme.DB:
        raise ConfigurationError(f"run_db_vote needs a DB config, got {config.scheme}")
    choices = _parse_votes(config, votes)
    state = prepare_db_ballot(config.d, config.N)
    if transcript:
        transcript.event(0, "PREPARE", payload={"scheme": "DB", "d": config.d, "N": config.N})
        transcript.event(0, "DISTRIBUTE")
    if stage_hook:
        stage_hook("prepared", state)
    for i, choice in enumerate(choices):
        state = cast_vote_db(state, i, choice)
        if transcript:
            transcript.event(0, "VOTE", site=i,
                             payload={"commitment": transcript.commit(0, i, choice.value)})
        if stage_hook:
            stage_hook(f"after_vote_{i}", state)
    if transcript:
        transcript.event(0, "RETURN")
    m = decode_db(state, config.d, config.N, rng)
    if transcript:
        transcript.event(0, "MEASURE", outcome=m)
    return RunResult("DB", m, [m])


def run_tb_vote(config: BallotConfig, votes, rng: np.random.Generator,
                intercept_hooks=None, transcript: Transcript | None = None,
                stage_hook=None) -> RunResult:
    """Travelling-ballot round; yes votes shift the moving qudit.

    ``intercept_hooks`` maps (voter_index, "pre"|"post") to a callable
    (state, rng) -> state invoked before/after that voter's operation,
    which is how the adversary module splices in measurements.
    """
    if config.scheme is not Scheme.TB:
        raise ConfigurationError(f"run_tb_vote needs a TB config, got {config.scheme}")
    choices = _parse_votes(config, votes)
    hooks = intercept_hooks or {}
    state = prepare_tb_ballot(config.d)
    shift = shift_unitary(config.d)
    if transcript:
        transcript.event(0, "PREPARE", payload={"scheme": "TB", "d": config.d, "N": config.N})
        transcript.event(0, "DISTRIBUTE")
    if stage_hook:
        stage_hook("prepared", state)
    for i, choice in enumerate(choices):
        if (i, "pre") in hooks:
            state = hooks[(i, "pre")](state, rng)
        if choice is Vote.YES:
            state = apply_local(state, 1, shift)
        if transcript:
            transcript.event(0, "VOTE", site=1,
                             payload={"commitment": transcript.commit(0, i, choice.value)})
        if (i, "post") in hooks:
            state = hooks[(i, "post")](state, rng)
        if stage_hook:
            stage_hook(f"after_vote_{i}", state)
    if transcript:
        transcript.event(0, "RETURN")
    m = decode_tb(state, config.d, rng)
    if transcript:
        transcript.event(0, "MEASURE", outcome=m)
    stats = {}
    if config.N == 2 and m in TWO_VOTER_TB_LABELS:
        stats["label"] = TWO_VOTER_TB_LABELS[m]
    return RunResult("TB", m, [m], statistics=stats)


def _secure_round(config: BallotConfig, choices, rep_rng, per_voter_thetas=None,
                  extra_phases=None):
    """One anti-reuse execution in the correlated basis; returns (m, p, rs)."""
    d = config.d
    state = CorrelatedState.uniform(d, config.N)
    rs = []
    for i, choice in enumerate(choices):
        if per_voter_thetas is not None:
            theta = per_voter_thetas[i][0 if choice is Vote.YES else 1]
        else:
            theta = config.theta_yes if choice is Vote.YES else config.theta_no
        # The pairing measurement is uniform over r for any ballot state.
        probs = np.full(d, float(np.sum(np.abs(state.c) ** 2)) / d)
        r = _sample(probs / probs.sum(), rep_rng)
        rs.append(int(r))
        state = state.apply_site_phase(theta).scaled(np.exp(-1j * r * theta))
        state = state.with_sites(state.sites + 1)
        if extra_phases and i in extra_phases:
            state = state.apply_site_phase(float(extra_phases[i]))
    state = state.apply_site_phase(-config.N * config.theta_no)
    k = np.arange(d)
    overlaps = (np.exp(-2j * np.pi * np.outer(k, k) / d) @ state.c) / math.sqrt(d)
    probs = np.clip(np.abs(overlaps) ** 2, 0.0, None)
    full = np.append(probs, max(0.0, 1.0 - probs.sum()))
    p = _sample(full / full.sum(), rep_rng)
    if p == d:
        return CHEAT_DETECTED, INVALID, rs
    return solve_tally(int(p), config), int(p), rs


def run_secure_vote(config: BallotConfig, votes, rng: np.random.Generator,
                    repetitions: int = 3, transcript: Transcript | None = None,
                    per_voter_thetas=None, extra_phases=None) -> RunResult:
    """Anti-reuse scheme: R independent executions must agree.

    Each repetition prepares a fresh ballot and fresh voting qudits from
    its own child stream. The result is the common tally when every
    repetition decodes the same valid multiple; anything else reports
    CHEAT_DETECTED. ``per_voter_thetas`` (authority-side tampering) and
    ``extra_phases`` (voter-side forgery) exist for the adversary module.
    """
    if config.scheme is not Scheme.SECURE:
        raise ConfigurationError(f"run_secure_vote needs a SECURE config, got {config.scheme}")
    if repetitions < 1:
        raise ConfigurationError(f"repetitions must be >= 1, got {repetitions}")
    choices = _parse_votes(config, votes)
    outcomes, ps = [], []
    for rep, rep_rng in enumerate(rng.spawn(repetitions)):
        if transcript:
            transcript.event(rep, "PREPARE",
                             payload={"scheme": "SECURE", "d": config.d, "N": config.N,
                                      "repetitions": repetitions})
            transcript.event(rep, "DISTRIBUTE")
        m, p, rs = _secure_round(config, choices, rep_rng, per_voter_thetas, extra_phases)
        if transcript:
            for i, choice in enumerate(choices):
                transcript.event(rep, "VOTE", site=i,
                                 payload={"commitment": transcript.commit(rep, i, choice.value),
                                          "r": rs[i]})
            transcript.event(rep, "RETURN")
            transcript.event(rep, "MEASURE", outcome={"p": p, "m": m})
        outcomes.append(m)
        ps.append(p)
    agree = len(set(outcomes)) == 1 and CHEAT_DETECTED not in outcomes
    m = outcomes[0] if agree else CHEAT_DETECTED
    return RunResult("SECURE", m, outcomes, p=ps,
                     statistics={"repetitions": repetitions, "agreement": agree})


def run_survey(config: BallotConfig, euros, rng: np.random.Generator,
               transcript: Transcript | None = None) -> RunResult:
    """Anonymous survey: each participant votes yes once per Euro."""
    if config.scheme is not Scheme.SURVEY:
        raise ConfigurationError(f"run_survey needs a SURVEY config, got {config.scheme}")
    amounts = [int(e) for e in euros]
    if len(amounts) != config.N:
        raise ConfigurationError(f"expected {config.N} amounts, got {len(amounts)}")
    if any(e < 0 for e in amounts):
        raise ConfigurationError("amounts must be non-negative")
    total = sum(amounts)
    if total >= config.d:
        raise ConfigurationError(f"total {total} would alias modulo d={config.d}")
    if total > config.max_total:
        raise ConfigurationError(f"total {total} exceeds the declared max {config.max_total}")
    state = prepare_db_ballot(config.d, config.N)
    if transcript:
        transcript.event(0, "PREPARE",
                         payload={"scheme": "SURVEY", "d": config.d, "N": config.N})
        transcript.event(0, "DISTRIBUTE")
    for i, amount in enumerate(amounts):
        state = cast_vote_db(state, i, amount)
        if transcript:
            transcript.event(0, "VOTE", site=i,
                             payload={"commitment": transcript.commit(0, i, amount)})
    if transcript:
        transcript.event(0, "RETURN")
    m = decode_db(state, config.d, config.N, rng)
    if transcript:
        transcript.event(0, "MEASURE", outcome=m)
    return RunResult("SURVEY", m, [m], statistics={"total": m})


@dataclass
class DiningResult:
    announcements: list[int]
    parity: int
    nsa_paid: bool


def dining_announcements(n: int, payer: int | None, coins: dict) -> list[int]:
    """Deterministic core: coins[(j, k)] with j < k are the shared bits."""
    out = []
    for k in range(n):
        s = sum(coins[(min(j, k), max(j, k))] for j in range(n) if j != k) % 2
        if payer == k:
            s ^= 1
        out.append(s)
    return out


def classical_dining(n: int, payer: int | None, rng: np.random.Generator) -> DiningResult:
    """Chaum's protocol: the announced parity is 1 iff a participant paid."""
    if n < 3:
        raise ConfigurationError(f"dining cryptographers needs n >= 3, got {n}")
    if payer is not None and not 0 <= payer < n:
        raise ConfigurationError(f"payer index {payer} out of range")
    coins = {(j, k): int(rng.integers(0, 2)) for j in range(n) for k in range(j + 1, n)}
    ann = dining_announcements(n, payer, coins)
    parity = sum(ann) % 2
    return DiningResult(ann, parity, nsa_paid=(parity == 0))


def classical_modular_vote(votes, rng: np.random.Generator) -> int:
    """Pairwise-key tally: antisymmetric keys cancel in the broadcast sum.

    Arithmetic runs modulo N + 1 so that every tally 0..N is
    representable, mirroring the d > N requirement of the quantum
    scheme.
    """
    bits = [int(v) for v in votes]
    n = len(bits)
    if n < 2:
        raise ConfigurationError(f"modular vote needs N >= 2, got {n}")
    if any(b not in (0, 1) for b in bits):
        raise ConfigurationError("votes must be bits")
    modulus = n + 1
    keys = {}
    for j in range(n):
        for k in range(j + 1, n):
            c = int(rng.integers(0, modulus))
            keys[(j, k)] = c
            keys[(k, j)] = (-c) % modulus
    messages = [(bits[k] + sum(keys[(j, k)] for j in range(n) if j != k)) % modulus
                for k in range(n)]
    return sum(messages) % modulus
