"""ratedrivers: aspect-sentiment analytics for rated consumer reviews.

Turns a corpus of rated reviews into data-driven aspects (topic model with
coherence-tuned hyperparameters), per-review aspect-sentiment vectors
(signed log-odds scores), and an interpretable rating classifier whose gain
and Shapley importances show which aspects drive ratings.
"""

__version__ = "0.1.0"
