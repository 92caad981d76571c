from .fit import (Collinearity, CrossValidation, DesignMatrix, EnergyModel, FitReport,
                  assemble_design, cross_validate, detect_collinear, fit, predict)

__all__ = ["Collinearity", "CrossValidation", "DesignMatrix", "EnergyModel", "FitReport",
           "assemble_design", "cross_validate", "detect_collinear", "fit", "predict"]
