from .pearson import CorrelationReport, batch_correlation, channel_correlation, pearson
