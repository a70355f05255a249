//! Analytics for the dashboard user studies: gaze clustering and scanpath
//! mining for graph comprehension, and Fitts' law statistics for the
//! feedback-modality pointing task.

pub mod fitts;
pub mod format;
pub mod gaze;
pub mod stats;
