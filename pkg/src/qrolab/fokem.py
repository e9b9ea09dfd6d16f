"""Textbook FO transformation over table-based toy PKEs.

The toy scheme's key generation builds a public random injective table
cipher[m][r]; the secret key is the first-coordinate inverse.  That makes
every quantity the harness needs (delta-correctness, gamma-spreadness,
Gamma(f), Gamma'(f) of the derandomized encryption) analytically
controllable, with planted faults available for the nonzero-delta and
constant-ciphertext variants.

H and G are realized as two independent oracle instances with disjoint
seeds; only H is ever extracted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .branching import enumerate_paths
from .config import ATOL
from .linalg import total_variation
from .oracle import LazyRandomOracle
from .relations import CommitFunction
from .simulator import SimulatorS


class DecapsGuardError(RuntimeError):
    """The adversary queried the challenge ciphertext to Decaps."""


class Tripwire:
    """Stand-in for a withheld secret key: any use raises immediately."""

    def _trip(self, *_a, **_k):
        raise AssertionError("secret key was accessed on a no-sk code path")

    __getattr__ = __getitem__ = __call__ = _trip


@dataclass
class PKESpec:
    """Toy public-key encryption over finite spaces with enumerable keys."""

    num_messages: int
    randomness_bits: int
    num_keys: int
    name: str
    _tables: list  # per key: table[m][r] -> ciphertext
    ct_space: int = 0  # 0: exactly the table size

    @property
    def num_random(self) -> int:
        return 2**self.randomness_bits

    @property
    def ciphertext_space(self) -> range:
        return range(self.ct_space or self.num_messages * self.num_random)

    def gen(self, key_index: int):
        """(sk, pk): pk is the public table, sk the first-match inverse."""
        table = self._tables[key_index % self.num_keys]
        inverse: dict[int, int] = {}
        for m in range(self.num_messages):
            for r in range(self.num_random):
                inverse.setdefault(table[m][r], m)
        return inverse, table

    def enc(self, pk, m: int, r: int) -> int:
        return pk[m][r]

    def dec(self, sk, c: int):
        return sk.get(c)

    def enc_commit(self, pk) -> CommitFunction:
        """The derandomized encryption as a commit function f(m, r)."""
        return CommitFunction(
            self.randomness_bits, self.num_messages,
            lambda m, r: pk[m][r],
            t_values=self.ciphertext_space,
            name=f"enc[{self.name}]",
        )


def toy_pke(num_messages: int, randomness_bits: int, seed: int = 0,
            num_keys: int = 1, faulty_cells: int = 0,
            constant_ct_message: bool = False, ct_space_factor: int = 2,
            name: str | None = None) -> PKESpec:
    """Random injective tables; optional planted faults on key 0.

    The ciphertext space is ct_space_factor times the table size, so garbage
    ciphertexts outside the image exist.  faulty_cells > 0 copies that many
    ciphertexts from message 0 into message 1 cells (collisions => decryption
    errors, Gamma' > 0).  constant_ct_message makes message 0 of key 0
    encrypt to a single ciphertext.
    """
    nr = 2**randomness_bits
    size = num_messages * nr
    ct_space = ct_space_factor * size
    tables = []
    for k in range(num_keys):
        rng = np.random.default_rng([seed, k])
        perm = rng.permutation(ct_space)
        table = [[int(perm[m * nr + r]) for r in range(nr)]
                 for m in range(num_messages)]
        if k == 0 and faulty_cells:
            if num_messages < 2 or faulty_cells > nr:
                raise ValueError("cannot plant that many faults")
            for j in range(faulty_cells):
                table[1][j] = table[0][j]
        if k == 0 and constant_ct_message:
            table[0] = [table[0][0]] * nr
        tables.append(table)
    return PKESpec(
        num_messages, randomness_bits, num_keys,
        name or f"toy-m{num_messages}-n{randomness_bits}-s{seed}"
               + ("-faulty" if faulty_cells else "")
               + ("-constct" if constant_ct_message else ""),
        tables, ct_space,
    )


def first_non_image_ciphertext(pke: PKESpec, key_index: int = 0) -> int:
    _, pk = pke.gen(key_index)
    image = {c for row in pk for c in row}
    for c in pke.ciphertext_space:
        if c not in image:
            return c
    raise ValueError("ciphertext space has no garbage values")


def wrong_randomness_adversary(probes=(0, 1)):
    """Submits candidate encryptions under shifted randomness: the
    re-encryption check must reject every one of them."""

    def adversary(pk, c_star, k_b, decaps, ro_h, ro_g, chooser):
        nr = len(pk[0])
        rejected = 0
        for m in probes:
            c = pk[m][(ro_h(m) + 1) % nr]
            if c == c_star:
                return chooser.choose_uniform(2)
            if decaps(c) is None:
                rejected += 1
        return 1 if rejected == len(probes) else 0

    return adversary


# -- estimators ------------------------------------------------------------------


def delta_correctness_estimate(pke: PKESpec) -> Fraction:
    """E over keygen of max_m Pr_r[Dec(Enc(m; r)) != m], exhaustively."""
    total = Fraction(0)
    for k in range(pke.num_keys):
        sk, pk = pke.gen(k)
        worst = Fraction(0)
        for m in range(pke.num_messages):
            errors = sum(
                1 for r in range(pke.num_random)
                if pke.dec(sk, pke.enc(pk, m, r)) != m
            )
            worst = max(worst, Fraction(errors, pke.num_random))
        total += worst
    return total / pke.num_keys


def gamma_spread_estimate(pke: PKESpec, mode: str = "strict") -> float:
    """Ciphertext min-entropy: worst-case, or averaged inside the log."""
    if mode not in ("strict", "weak"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "strict":
        worst = 0.0
        for k in range(pke.num_keys):
            _, pk = pke.gen(k)
            for m in range(pke.num_messages):
                counts: dict[int, int] = {}
                for r in range(pke.num_random):
                    c = pke.enc(pk, m, r)
                    counts[c] = counts.get(c, 0) + 1
                worst = max(worst, max(counts.values()) / pke.num_random)
        return float(-np.log2(worst))
    acc = 0.0
    for k in range(pke.num_keys):
        _, pk = pke.gen(k)
        best = 0
        for m in range(pke.num_messages):
            counts = {}
            for r in range(pke.num_random):
                c = pke.enc(pk, m, r)
                counts[c] = counts.get(c, 0) + 1
            best = max(best, max(counts.values()))
        acc += best / pke.num_random
    return float(-np.log2(acc / pke.num_keys))


# -- the KEM ---------------------------------------------------------------------


def fo_encaps(pke: PKESpec, pk, h_query, g_query, chooser):
    """(K, c, m): m uniform, c = Enc(m; H(m)), K = G(m)."""
    m = chooser.choose_uniform(pke.num_messages)
    r = h_query(m)
    c = pke.enc(pk, m, r)
    return g_query(m), c, m

def fo_decaps(pke: PKESpec, sk, pk, c, h_query, g_query):
    """Textbook decapsulation with re-encryption check and explicit rejection."""
    m = pke.dec(sk, c)
    if m is None:
        return None
    if pke.enc(pk, m, h_query(m)) != c:
        return None
    return g_query(m)


def simulated_decaps(pke: PKESpec, sim: SimulatorS, g_query, c):
    """Extraction-based decapsulation: no secret key on this code path."""
    m_hat = sim.e_query(c)
    if m_hat.is_empty:
        return None
    return g_query(m_hat.value)


# -- games -------------------------------------------------------------------------


def game_trace_jsonl(trace: list) -> str:
    """Serialize a game trace (every oracle/Decaps call) as JSON lines."""
    import json

    return "\n".join(json.dumps(e, sort_keys=True, default=str) for e in trace)


def indcca_game(pke: PKESpec, adversary, backend: str, chooser,
                key_index: int = 0, key_bits: int = 2,
                keep_ro_query: bool = True, collect=None,
                trace: list | None = None) -> bool:
    """One IND-CCA-KEM run; backend selects real or extraction decapsulation.

    With backend='simulated-decaps' and keep_ro_query=False the decapsulation
    closure receives a Tripwire in place of the secret key.  When a trace
    list is supplied, every Decaps call is appended to it (H and G calls are
    recorded in the simulator log and the G table).
    """
    if backend not in ("real-decaps", "simulated-decaps"):
        raise ValueError(f"unknown backend {backend!r}")
    sk, pk = pke.gen(key_index)
    commit = CommitFunction(
        pke.randomness_bits, pke.num_messages, lambda m, r: pk[m][r],
        t_values=pke.ciphertext_space, name="enc",
    )
    sim = SimulatorS(commit, backend="dense", chooser=chooser)
    g_oracle = LazyRandomOracle(key_bits, chooser)
    b = chooser.choose_uniform(2)
    k0, c_star, _ = fo_encaps(pke, pk, sim.ro_classical, g_oracle.query, chooser)
    k1 = chooser.choose_uniform(2**key_bits)
    k_b = k0 if b == 0 else k1

    sk_for_decaps = sk
    if backend == "simulated-decaps" and not keep_ro_query:
        sk_for_decaps = Tripwire()
    answers: list = []

    def decaps(c):
        if c == c_star:
            raise DecapsGuardError("adversary queried the challenge ciphertext")
        if backend == "real-decaps":
            out = fo_decaps(pke, sk_for_decaps, pk, c, sim.ro_classical,
                            g_oracle.query)
        else:
            if keep_ro_query:
                m = pke.dec(sk_for_decaps, c)
                if m is not None:
                    sim.ro_classical(m)
            out = simulated_decaps(pke, sim, g_oracle.query, c)
        answers.append(out)
        if trace is not None:
            trace.append({"call": "decaps", "backend": backend,
                          "input": int(c), "output": out})
        return out

    b_prime = adversary(pk, c_star, k_b, decaps, sim.ro_classical,
                        g_oracle.query, chooser)
    if trace is not None:
        trace.extend(sim.log)
    if collect is not None:
        collect(tuple(answers), b_prime, sim.log)
    return b_prime == b


def ow_cpa_game(pke: PKESpec, adversary, chooser, key_index: int = 0) -> bool:
    """One OW-CPA run: random message, honestly randomized encryption."""
    _, pk = pke.gen(key_index)
    m_star = chooser.choose_uniform(pke.num_messages)
    r = chooser.choose_uniform(pke.num_random)
    c_star = pke.enc(pk, m_star, r)
    return adversary(pk, c_star, chooser) == m_star


# -- backend agreement --------------------------------------------------------------


@dataclass
class AgreementReport:
    params: dict
    tv: float
    budget: float
    runtime_ms: float

    @property
    def satisfied(self) -> bool:
        return self.tv <= self.budget + ATOL

    def as_dict(self) -> dict:
        return dict(params=self.params, tv=self.tv, budget=self.budget,
                    satisfied=bool(self.satisfied))


def backend_agreement_experiment(pke: PKESpec, adversary,
                                 keep_ro_query: bool = True,
                                 key_bits: int = 2) -> AgreementReport:
    """TV between real and extraction decapsulation on the exhaustive game tree.

    The observable is (all Decaps answers, adversary output); the budget sums
    the per-decaps disagreement terms (2 2^-n Gamma(f) + 2 2^-n) and one
    almost-commutation term 8 sqrt(2 Gamma(f)/2^n) per extraction query that
    precedes a later RO query in the run.
    """
    start = time.perf_counter()
    dists = {}
    stats = {"q_d": 0, "swaps": 0}
    for backend in ("real-decaps", "simulated-decaps"):
        rows: dict = {}

        def run(ch):
            seen = {}

            def collect(answers, b_prime, log):
                seen["row"] = (answers, b_prime)
                if backend == "simulated-decaps":
                    e_idx = [i for i, e in enumerate(log) if e["interface"] == "E"]
                    ro_idx = [i for i, e in enumerate(log) if e["interface"] == "RO"]
                    swaps = sum(
                        sum(1 for j in ro_idx if j > i) for i in e_idx
                    )
                    stats["swaps"] = max(stats["swaps"], swaps)
                    stats["q_d"] = max(stats["q_d"], len(answers))

            indcca_game(pke, adversary, backend, ch, key_bits=key_bits,
                        keep_ro_query=keep_ro_query, collect=collect)
            return seen["row"]

        for p, row in enumerate_paths(run):
            rows[row] = rows.get(row, 0.0) + p
        dists[backend] = rows
    tv = total_variation(dists["real-decaps"], dists["simulated-decaps"])
    _, pk = pke.gen(0)
    f = pke.enc_commit(pk)
    n = pke.randomness_bits
    per_decaps = 2.0 * f.gamma / 2.0**n + 2.0 / 2.0**n
    budget = stats["q_d"] * per_decaps + stats["swaps"] * 8.0 * np.sqrt(
        2.0 * f.gamma / 2.0**n
    )
    ms = (time.perf_counter() - start) * 1000.0
    return AgreementReport(
        dict(pke=pke.name, n=n, messages=pke.num_messages,
             q_d=stats["q_d"], swaps=stats["swaps"], gamma=f.gamma,
             keep_ro_query=keep_ro_query),
        tv, float(budget), ms,
    )


# -- bundled adversaries ---------------------------------------------------------------


def coin_guess_adversary(pk, c_star, k_b, decaps, ro_h, ro_g, chooser):
    return chooser.choose_uniform(2)


def key_checking_adversary(probe_messages=(0, 1), q_d: int = 2):
    """Classical CCA distinguisher: re-encrypts candidate messages, uses
    Decaps on honestly formed non-challenge ciphertexts, and tests K_b
    against G of the candidates.  Kept narrow so exhaustive game trees stay
    small: only the listed messages are probed."""

    def adversary(pk, c_star, k_b, decaps, ro_h, ro_g, chooser):
        used = 0
        for m in probe_messages:
            r = ro_h(m)
            c = pk[m][r]
            if c == c_star:
                return 0 if k_b == ro_g(m) else 1
            if used < q_d:
                used += 1
                k = decaps(c)
                if k is not None and k != ro_g(m):
                    return 1
        return chooser.choose_uniform(2)

    return adversary


def garbage_decaps_adversary(invalid_c: int):
    def adversary(pk, c_star, k_b, decaps, ro_h, ro_g, chooser):
        c = invalid_c
        if c == c_star:
            c += 1
        out = decaps(c)
        return 1 if out is None else 0

    return adversary


def guessing_ow_adversary(pk, c_star, chooser):
    return chooser.choose_uniform(len(pk))
