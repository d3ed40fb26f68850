from vatlab.ddpg.losses import (
    ActorLosses,
    actor_loss,
    actor_losses,
    aux_loss,
    aux_loss_terms,
    critic_loss,
    normalized_targets,
    td_targets,
)
from vatlab.ddpg.replay import Batch, InsufficientDataError, ReplayBuffer, Trajectory, mix_schedule, sample_batch
from vatlab.ddpg.trainer import (
    DivergenceError,
    Published,
    SharedStore,
    TrainConfig,
    Trainer,
    collect_actor_episode,
    collect_htg_episode,
    episode_source,
    load_actor,
)
