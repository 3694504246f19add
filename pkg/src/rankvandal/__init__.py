"""Desk-scale testbed for search-poisoning wiki revisions.

Attack side: promotional-content injection into raw paragraphs, a twin-tower
passage selector trained against four frozen discriminators with min-norm
multi-task weighting, and an end-to-end revision attack against a local
simulated wiki (BM25 search plus a gradient-boosted vandalism detector).
Defense side: a sentence-coherence flagger and adversarial retraining of the
detector. Evaluation: rank-boosting / evasion / relevancy / consistency /
promotion-success metrics, keyword-density baseline, and revenue estimation.
"""

__version__ = "0.1.0"
