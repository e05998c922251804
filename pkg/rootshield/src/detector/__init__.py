from .AttackDetector import AttackDetector, DetectorEvent, DetectorState, LoadSample, prime_al, al_from_rates, step
