from .models import (
    ToolClass, VcsOp, IntervalSource, ExperimentGroup,
    ActivityEvent, VcsEvent, ReviewEvent, DiffMeta, ToolCatalog, EventLog,
    Violation, ValidationReport,
    SessionConfig, Session, SessionSet, AnchorConfig,
    CommitAttribution, ContributingInterval, DiffDat, DatRun,
    TsdRecord, CgtRecord, TrendPoint, AggregateReport, EstimateRecord, EstimateReport,
    GroupAssignment, ExperimentSample, WelchResult, DistributionShift,
    BaselineTable, SavingsRecord, SavingsReport, NetBenefit,
    SimConfig, LabeledInterval, GroundTruthDiff, GroundTruth, AccuracyReport,
    RunManifest
)

__all__ = [
    'ToolClass', 'VcsOp', 'IntervalSource', 'ExperimentGroup',
    'ActivityEvent', 'VcsEvent', 'ReviewEvent', 'DiffMeta', 'ToolCatalog', 'EventLog',
    'Violation', 'ValidationReport',
    'SessionConfig', 'Session', 'SessionSet', 'AnchorConfig',
    'CommitAttribution', 'ContributingInterval', 'DiffDat', 'DatRun',
    'TsdRecord', 'CgtRecord', 'TrendPoint', 'AggregateReport', 'EstimateRecord', 'EstimateReport',
    'GroupAssignment', 'ExperimentSample', 'WelchResult', 'DistributionShift',
    'BaselineTable', 'SavingsRecord', 'SavingsReport', 'NetBenefit',
    'SimConfig', 'LabeledInterval', 'GroundTruthDiff', 'GroundTruth', 'AccuracyReport',
    'RunManifest'
]
