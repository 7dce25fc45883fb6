"""pedal: active-learning post-editing engine for MT corpus generation.

An online quality estimator is trained from each post-edit and used to
prioritize a post-editing queue, auto-close good hypotheses, and sanity
check incoming edits.  A deterministic simulator replays gold post-edits
to compare prioritization policies against random and oracle baselines.
"""

__version__ = "0.1.0"
