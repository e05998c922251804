from .Profiles import LegitProfile, AttackSpec, FlashCrowdSpec, AttackPlan, ATTACK_KINDS, polymorphic_specs
from .LegitGenerator import LegitPopulation, gen_legit, TLDS
from .AttackGenerator import gen_attack, gen_flash_crowd, known_sources
from .Polymorphic import gen_polymorphic, gen_scenario, merge_streams
