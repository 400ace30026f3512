class MetricError(ValueError):
    pass
