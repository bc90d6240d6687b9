"""chronorisk: multimodal chronic-disease risk prediction.

Attention-fusion model over clinical notes and blood panels, Shapley-value
explanations, synthetic cohort generation, evaluation reports, a durable
prediction store, and an async-job HTTP service.
"""

__version__ = "0.1.0"
