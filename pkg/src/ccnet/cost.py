from dataclasses import asdict, dataclass


@dataclass
class CostMeter:
    """Exact operation counters for one or more forward passes.

    ``additions`` counts the vector additions that build effective weights
    (k per unit, each of length q). ``modulation_mults`` counts the extra
    coefficient scalings of the modulated path and stays 0 otherwise.
    """

    multiply_adds: int = 0
    additions: int = 0
    lookups: int = 0
    rng_draws: int = 0
    modulation_mults: int = 0

    def reset(self):
        self.multiply_adds = 0
        self.additions = 0
        self.lookups = 0
        self.rng_draws = 0
        self.modulation_mults = 0

    def add(self, other):
        self.multiply_adds += other.multiply_adds
        self.additions += other.additions
        self.lookups += other.lookups
        self.rng_draws += other.rng_draws
        self.modulation_mults += other.modulation_mults

    def as_dict(self):
        return asdict(self)
