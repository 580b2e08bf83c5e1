from pulse_iv.data.dataset import (
    Dataset,
    Identification,
    ModelPartition,
    Role,
    Schema,
    add_intercept,
    center,
    load_csv,
)
from pulse_iv.data.design import DesignView, iv_loss, ols_loss, projection_apply
