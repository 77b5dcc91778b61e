"""vnfmigsim: VNF forwarding-graph migration simulator for edge-core networks.

Discrete-time simulation of service chains on a Waxman edge-core topology
with delay/energy models, three migration policies (random, threshold,
advantage actor-critic), and a digital twin (multi-task VAE + LSTM) that
augments the learner's replay buffers with synthetic experience.
"""

__version__ = "0.1.0"

from .harness import ExperimentConfig, compare_policies, run_experiment  # noqa: F401
