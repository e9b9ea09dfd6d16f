"""Commit-and-open sigma protocols: soundness structures, trivial attacks,
and the online witness extractor.

Challenges are subsets of the slot indices [0, ell); an access structure is a
monotone family of subsets of the challenge LIST (by index).  Commitments are
a_i = H(x_i) with x_i = message || randomness, so the extractor runs the
RO-simulator with the identity commit function f(x, h) = h.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .branching import RandomChooser
from .oracle import LazyRandomOracle
from .relations import identity_commit
from .simulator import SimulatorS


# -- access structures -------------------------------------------------------------


@dataclass(frozen=True)
class AccessStructure:
    """Monotone increasing family of subsets of range(num_challenges)."""

    num_challenges: int
    member_fn: object
    min_sets: tuple = ()
    name: str = "custom"

    def member(self, s) -> bool:
        return bool(self.member_fn(frozenset(s)))

    def check_monotone(self, samples: int = 200, seed: int = 0) -> bool:
        rng = np.random.default_rng(seed)
        universe = list(range(self.num_challenges))
        for _ in range(samples):
            size = int(rng.integers(0, self.num_challenges + 1))
            s = frozenset(rng.choice(universe, size=size, replace=False).tolist())
            if self.member(s):
                extra = [u for u in universe if u not in s]
                if extra:
                    bigger = s | {extra[int(rng.integers(len(extra)))]}
                    if not self.member(bigger):
                        return False
        return True

    def check_min_sets(self) -> bool:
        for s in self.min_sets:
            if not self.member(s):
                return False
            for drop in s:
                if self.member(frozenset(s) - {drop}):
                    return False
        return True


def threshold_structure(k: int, num_challenges: int) -> AccessStructure:
    """T_k: all challenge sets of size at least k."""
    min_sets = tuple(
        frozenset(c) for c in itertools.combinations(range(num_challenges), k)
    )
    return AccessStructure(num_challenges, lambda s: len(s) >= k, min_sets, f"T{k}")


def all_nonempty_structure(num_challenges: int) -> AccessStructure:
    return AccessStructure(num_challenges, lambda s: len(s) >= 1,
                           tuple(frozenset({i}) for i in range(num_challenges)),
                           "T1")


def max_nonmember_size(access: AccessStructure) -> int:
    """Largest |S| with S outside the structure (exhaustive, monotone-pruned)."""
    nc = access.num_challenges
    if access.min_sets:
        # S is a non-member iff its complement hits every minimal member
        for miss in range(0, nc + 1):
            for comp in itertools.combinations(range(nc), miss):
                comp_set = set(comp)
                if all(comp_set & set(ms) for ms in access.min_sets):
                    return nc - miss
        return 0
    if nc > 20:
        raise ValueError("challenge space too large for exhaustive search "
                         "without min_sets")
    for size in range(nc, -1, -1):
        for s in itertools.combinations(range(nc), size):
            if not access.member(frozenset(s)):
                return size
    return 0


# -- sigma protocol specification -----------------------------------------------------


@dataclass
class SigmaSpec:
    """Declarative commit-and-open protocol description."""

    ell: int
    challenges: tuple            # tuple of frozensets of slot indices
    randomness_bits: int
    slot_space: int              # number of distinct slot messages
    verifier: object             # (instance, challenge, {slot: message}) -> bool
    name: str = "sigma"

    def __post_init__(self):
        self.challenges = tuple(frozenset(c) for c in self.challenges)
        if not self.challenges:
            raise ValueError("challenge set must be non-empty")
        covered = frozenset().union(*self.challenges)
        if covered != frozenset(range(self.ell)):
            raise ValueError("challenges must cover every slot")
        for c in self.challenges:
            if not c <= frozenset(range(self.ell)):
                raise ValueError("challenge outside slot range")

    @property
    def domain_size(self) -> int:
        return self.slot_space * 2**self.randomness_bits

    def encode(self, message: int, r: int) -> int:
        return message * 2**self.randomness_bits + r

    def decode(self, x: int) -> int:
        return x >> self.randomness_bits

    def verify(self, instance, challenge, openings: dict) -> bool:
        return bool(self.verifier(instance, challenge, openings))


def p_trivial(spec: SigmaSpec, access: AccessStructure) -> Fraction:
    """(1/|C|) max_{S not in the structure} |S|."""
    return Fraction(max_nonmember_size(access), len(spec.challenges))


def p_trivial_parallel(spec: SigmaSpec, access: AccessStructure, r: int) -> Fraction:
    """p_triv of the r-fold parallel repetition.

    A subset of C^r lies outside the product structure iff every marginal is
    a non-member, so the maximal one is a product of maximal per-position
    non-members; the search therefore reduces to per-position searches.
    """
    if r < 1:
        raise ValueError("need r >= 1")
    per_position = max_nonmember_size(access)
    return Fraction(per_position**r, len(spec.challenges) ** r)


def brute_force_p_trivial_parallel(spec: SigmaSpec, access: AccessStructure,
                                   r: int) -> Fraction:
    """Reference oracle: enumerate all subsets of C^r (tiny cases only)."""
    tuples = list(itertools.product(range(len(spec.challenges)), repeat=r))
    if 2 ** len(tuples) > 2**20:
        raise ValueError("too large for brute force")
    best = 0
    for size in range(len(tuples), 0, -1):
        if size <= best:
            break
        for subset in itertools.combinations(tuples, size):
            ok = True
            for pos in range(r):
                marginal = frozenset(t[pos] for t in subset)
                if access.member(marginal):
                    ok = False
                    break
            if ok:
                best = size
                break
    return Fraction(best, len(spec.challenges) ** r)


# -- the bundled toy protocol -----------------------------------------------------------


def xor_shares_verifier(share_bits: int):
    """Slot i opens (s_i, s_{i+1 mod 3}); a challenge {i, j} checks overlap
    consistency and that the three recovered shares XOR to the instance."""
    mask = 2**share_bits - 1

    def split(msg: int) -> tuple[int, int]:
        return (msg >> share_bits) & mask, msg & mask

    def verify(instance, challenge, openings) -> bool:
        c = sorted(challenge)
        if len(c) != 2:
            return False
        shares: dict[int, int] = {}
        for i in challenge:
            a, b = split(openings[i])
            for idx, val in ((i, a), ((i + 1) % 3, b)):
                if idx in shares and shares[idx] != val:
                    return False
                shares[idx] = val
        if len(shares) != 3:
            return False
        return shares[0] ^ shares[1] ^ shares[2] == instance

    return verify


def xor_toy_spec(share_bits: int = 2, randomness_bits: int = 16) -> SigmaSpec:
    return SigmaSpec(
        ell=3,
        challenges=(frozenset({0, 1}), frozenset({1, 2}), frozenset({0, 2})),
        randomness_bits=randomness_bits,
        slot_space=2 ** (2 * share_bits),
        verifier=xor_shares_verifier(share_bits),
        name=f"xor-2of3-k{share_bits}-r{randomness_bits}",
    )


def xor_toy_hook(share_bits: int):
    """S-sound* witness extractor: V-scan, then recover shares from any
    verified challenge; returns the share triple or None."""
    mask = 2**share_bits - 1

    def hook(spec: SigmaSpec, instance, extracted: dict):
        openings = {i: spec.decode(x) for i, x in extracted.items() if x is not None}
        verified = [
            c for c in spec.challenges
            if c <= set(openings) and spec.verify(instance, c, openings)
        ]
        if not verified:
            return None
        shares: dict[int, int] = {}
        for i in verified[0]:
            msg = openings[i]
            shares[i] = (msg >> share_bits) & mask
            shares[(i + 1) % 3] = msg & mask
        return (shares[0], shares[1], shares[2])

    return hook


def xor_witness_checker(instance, witness) -> bool:
    return witness is not None and witness[0] ^ witness[1] ^ witness[2] == instance


def xor_instance_gen(share_bits: int):
    def gen(rng: np.random.Generator):
        shares = tuple(int(rng.integers(2**share_bits)) for _ in range(3))
        return shares[0] ^ shares[1] ^ shares[2], shares

    return gen


class HonestProver:
    """Commits to a fresh 3-share split of the witness instance."""

    def __init__(self, spec: SigmaSpec, instance, witness_shares, rng,
                 share_bits: int):
        self.spec = spec
        self.share_bits = share_bits
        s = list(witness_shares)
        self.slots = [
            self.spec.encode((s[i] << share_bits) | s[(i + 1) % 3],
                             int(rng.integers(2**spec.randomness_bits)))
            for i in range(3)
        ]

    def commit(self, ro) -> list[int]:
        return [ro(x) for x in self.slots]

    def respond(self, challenge) -> dict:
        return {i: self.slots[i] for i in challenge}


class TrivialAttackProver:
    """Answers exactly one target challenge; garbage in the remaining slot."""

    def __init__(self, spec: SigmaSpec, instance, witness_shares, rng,
                 share_bits: int, target: int = 0):
        self.spec = spec
        self.target = spec.challenges[target]
        s = list(witness_shares)
        good = {
            i: (s[i] << share_bits) | s[(i + 1) % 3] for i in range(3)
        }
        self.slots = []
        for i in range(3):
            msg = good[i]
            if i not in self.target:
                msg = (msg + 1) % spec.slot_space  # break both other challenges
            self.slots.append(
                spec.encode(msg, int(rng.integers(2**spec.randomness_bits)))
            )

    def commit(self, ro) -> list[int]:
        return [ro(x) for x in self.slots]

    def respond(self, challenge) -> dict:
        return {i: self.slots[i] for i in challenge}


class NoCommitProver:
    """Sends garbage commitments without ever querying the oracle."""

    def __init__(self, spec: SigmaSpec, *_a, **_k):
        self.spec = spec

    def commit(self, ro) -> list[int]:
        return [i % 2**16 for i in range(self.spec.ell)]

    def respond(self, challenge) -> dict:
        return {i: 0 for i in challenge}


# -- online extraction ---------------------------------------------------------------


@dataclass
class ExtractTranscript:
    commitments: list
    extracted: dict
    challenge: object
    openings: dict
    accepted: bool
    log: list
    challenge_log_index: int


def online_extract(prover, spec: SigmaSpec, access: AccessStructure, hook,
                   instance, sim: SimulatorS):
    """Run the prover over S.RO, extract on its commitments, then finish the run."""
    commitments = prover.commit(sim.ro_classical)
    if len(commitments) != spec.ell:
        raise ValueError("prover violated the round structure")
    extracted = {}
    for i, a_i in enumerate(commitments):
        out = sim.e_query(a_i)
        extracted[i] = None if out.is_empty else out.value
    witness = None
    openings_hat = {i: spec.decode(x) for i, x in extracted.items() if x is not None}
    s_hat = frozenset(
        idx for idx, c in enumerate(spec.challenges)
        if c <= set(openings_hat) and spec.verify(instance, c, openings_hat)
    )
    if access.member(s_hat):
        witness = hook(spec, instance, extracted)
    challenge_log_index = len(sim.log)
    c_idx = sim.chooser.choose(np.full(len(spec.challenges), 1.0 / len(spec.challenges)))
    challenge = spec.challenges[c_idx]
    openings = prover.respond(challenge)
    ok = all(sim.ro_classical(openings[i]) == commitments[i] for i in challenge)
    accepted = ok and spec.verify(
        instance, challenge, {i: spec.decode(x) for i, x in openings.items()}
    )
    return witness, ExtractTranscript(
        commitments, extracted, challenge, openings, accepted,
        sim.log, challenge_log_index,
    )


def run_real_game(prover, spec: SigmaSpec, instance, chooser, n: int):
    """The prover against the plain lazily-sampled RO (no extraction)."""
    ro = LazyRandomOracle(n, chooser)
    commitments = prover.commit(ro.query)
    c_idx = chooser.choose(np.full(len(spec.challenges), 1.0 / len(spec.challenges)))
    challenge = spec.challenges[c_idx]
    openings = prover.respond(challenge)
    ok = all(ro.query(openings[i]) == commitments[i] for i in challenge)
    return ok and spec.verify(
        instance, challenge, {i: spec.decode(x) for i, x in openings.items()}
    )


@dataclass
class SigmaReport:
    params: dict
    p_prover: float
    p_extract: float
    p_triv: Fraction
    epsilon: float
    epsilon_exact: float
    rhs: float
    vacuous: bool
    satisfied: bool
    runtime_ms: float
    trials: int

    def as_dict(self) -> dict:
        d = dict(self.params)
        d.update(
            p_prover=self.p_prover, p_extract=self.p_extract,
            p_triv=str(self.p_triv), epsilon=self.epsilon,
            epsilon_exact=self.epsilon_exact, rhs=self.rhs,
            vacuous=self.vacuous, satisfied=self.satisfied, trials=self.trials,
        )
        return d


def epsilon_simplified(ell: int, q: int, n: int) -> float:
    return 34.0 * ell * q / np.sqrt(2.0**n) + 2365.0 * q**3 / 2.0**n


def epsilon_exact(ell: int, q: int, n: int, gamma_prime: int = 1) -> float:
    return (8.0 * np.sqrt(2.0) * ell * (2 * q + ell + 1) / np.sqrt(2.0**n)
            + (40.0 * np.e**2 * (q + ell + 1) ** 3 * gamma_prime + 2.0) / 2.0**n)


def run_sigma_experiment(prover_factory, spec: SigmaSpec, access: AccessStructure,
                         hook, instance_gen, witness_checker, n: int,
                         backend: str = "product", trials: int = 1000,
                         seed: int = 0, exhaustive: bool = False) -> SigmaReport:
    """Estimate prover and extractor success and check the extraction theorem.

    Pr[prover] is measured against the real (lazily sampled) RO; Pr[extract]
    in the simulated game.  The inequality uses the simplified epsilon and is
    flagged vacuous when epsilon >= 1 or the right-hand side is negative.

    With exhaustive=True both probabilities are computed exactly over the
    full oracle/measurement/challenge game tree (the prover's own coins stay
    fixed by the seed so the tree is finite).
    """
    start = time.perf_counter()
    master = np.random.SeedSequence(seed)
    commit = identity_commit(n, spec.domain_size)
    if exhaustive:
        return _run_sigma_exhaustive(prover_factory, spec, access, hook,
                                     instance_gen, witness_checker, n,
                                     backend, master, commit, start)
    seeds = master.spawn(2 * trials)
    p_wins = 0
    e_wins = 0
    q_used = 0
    for k in range(trials):
        s_prover, s_oracle = seeds[2 * k].spawn(2)
        rng = np.random.default_rng(s_prover)
        instance, shares = instance_gen(rng)
        prover = prover_factory(spec, instance, shares, rng)
        chooser = RandomChooser(np.random.default_rng(s_oracle))
        if run_real_game(prover, spec, instance, chooser, n):
            p_wins += 1
        s_prover2, s_oracle2 = seeds[2 * k + 1].spawn(2)
        rng2 = np.random.default_rng(s_prover2)
        instance2, shares2 = instance_gen(rng2)
        prover2 = prover_factory(spec, instance2, shares2, rng2)
        sim = SimulatorS(commit, backend=backend, seed=s_oracle2)
        witness, transcript = online_extract(prover2, spec, access, hook,
                                             instance2, sim)
        q_used = max(q_used, sum(
            1 for e in transcript.log[:transcript.challenge_log_index]
            if e["interface"] == "RO"
        ))
        if witness is not None and witness_checker(instance2, witness):
            e_wins += 1
    p_prover = p_wins / trials
    p_extract = e_wins / trials
    return _sigma_report(spec, access, n, backend, p_prover, p_extract,
                         q_used, trials, start,
                         mc_slack=3.0 * np.sqrt(0.25 / trials))


def _run_sigma_exhaustive(prover_factory, spec, access, hook, instance_gen,
                          witness_checker, n, backend, master, commit, start):
    from .branching import enumerate_paths

    s_prover, _ = master.spawn(2)
    rng0 = np.random.default_rng(s_prover)
    instance, shares = instance_gen(rng0)
    coin_seed = np.random.default_rng(s_prover).integers(2**32)

    def mk_prover():
        return prover_factory(spec, instance, shares,
                              np.random.default_rng(coin_seed))

    def run_real(ch):
        return run_real_game(mk_prover(), spec, instance, ch, n)

    p_prover = sum(p for p, win in enumerate_paths(run_real) if win)
    q_box = [0]

    def run_sim(ch):
        sim = SimulatorS(commit, backend=backend, chooser=ch)
        witness, transcript = online_extract(mk_prover(), spec, access, hook,
                                             instance, sim)
        q_box[0] = max(q_box[0], sum(
            1 for e in transcript.log[:transcript.challenge_log_index]
            if e["interface"] == "RO"
        ))
        return witness is not None and witness_checker(instance, witness)

    p_extract = sum(p for p, win in enumerate_paths(run_sim) if win)
    return _sigma_report(spec, access, n, backend, float(p_prover),
                         float(p_extract), q_box[0], 0, start, mc_slack=0.0)


def _sigma_report(spec, access, n, backend, p_prover, p_extract, q_used,
                  trials, start, mc_slack):
    ptriv = p_trivial(spec, access)
    eps = epsilon_simplified(spec.ell, q_used, n)
    eps_exact = epsilon_exact(spec.ell, q_used, n)
    rhs = (p_prover - float(ptriv) - eps) / (1.0 - float(ptriv))
    vacuous = eps >= 1.0 or rhs <= 0.0
    satisfied = vacuous or p_extract >= rhs - mc_slack
    ms = (time.perf_counter() - start) * 1000.0
    return SigmaReport(
        dict(n=n, ell=spec.ell, q=q_used, spec=spec.name,
             access=access.name, backend=backend,
             mode="exhaustive" if trials == 0 else "monte-carlo"),
        p_prover, p_extract, ptriv, eps, eps_exact, rhs, vacuous, satisfied,
        ms, trials,
    )
