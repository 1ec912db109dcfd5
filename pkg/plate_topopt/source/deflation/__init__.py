from .campaign import DeflationCampaign, DeflationResult, MinimizerRecord, deflate

__all__ = ["DeflationCampaign", "DeflationResult", "MinimizerRecord", "deflate"]
