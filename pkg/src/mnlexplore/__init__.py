"""Optimal exploration of new products in capacity-constrained MNL assortments."""
from .epochs import (
    EpochQuantities, cumulative_benefit_beta, epoch_quantities, epoch_regret,
    fictitious_revenue_alpha, reward_loss_time_gain_ratio, scaled_interim_regret,
)
from .hetero import (
    BernoulliLikeParams, ClassCInstance, bernoulli_quadratic, classify_optimal,
    closed_form_regret, regret_difference, threshold_theta,
)
from .instances import build_named_instance, instance_I, instance_J, worked_example
from .model import (
    AssortmentPlan, HStatistic, Instance, MarketState, PriorSpec, choice_probabilities,
    effective_weight, expected_revenue, sample_choice,
)
from .optimum import best_known_assortment, ex_post_optimum, expected_ex_post_optimum, is_terminal
from .oracle import exact_policy_regret, optimal_value
from .policies import (
    PolicyKind, UcbSchedule, efa_decide, explore_all_decide, explore_one_decide,
    fixed_set_decide, hefa_decide, hetero_prior_decide, make_policy, ts_decide, ucb_decide,
)
from .simulate import EpisodeLog, RegretEstimate, estimate_regret, run_episode

__version__ = "0.1.0"
