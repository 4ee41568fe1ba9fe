use super::intent::QueryKind;
use crate::perception::Detection;
use crate::world_sim::SensorSnapshot;

/// Default maximum sensor-data age for answering a query.
pub const DEFAULT_STALENESS: f64 = 1.0;

/// What the answer path knows about the robot at query time.
#[derive(Debug, Clone, Default)]
pub struct QueryContext {
    pub snapshot: Option<SensorSnapshot>,
    pub detections: Vec<Detection>,
    /// Human-readable activity, e.g. "idle" or "navigating to kitchen".
    pub activity: String,
}

/// Render the answer to a query from current sensor data.
pub fn answer_query(q: QueryKind, ctx: &QueryContext, now: f64, staleness: f64) -> String {
    let Some(snap) = &ctx.snapshot else {
        return "I have no sensor data yet.".into();
    };
    let age = now - snap.stamp;
    if age > staleness {
        return format!("My sensor data is stale (last update {age:.2} s ago).");
    }
    match q {
        QueryKind::Position => format!("I am at x={:.2}, y={:.2}.", snap.pose.x, snap.pose.y),
        QueryKind::TravelDistance => format!("I have traveled {:.2} m.", snap.odom_distance),
        QueryKind::VisibleObjects => {
            if ctx.detections.is_empty() {
                "I do not see any objects.".into()
            } else {
                let items: Vec<String> = ctx
                    .detections
                    .iter()
                    .map(|d| format!("{} at ({:.2}, {:.2})", d.label, d.x, d.y))
                    .collect();
                format!("I can see: {}.", items.join(", "))
            }
        }
        QueryKind::Status => {
            let activity = if ctx.activity.is_empty() { "idle" } else { &ctx.activity };
            format!(
                "I am {activity}, at x={:.2}, y={:.2}, heading {:.2} rad.",
                snap.pose.x, snap.pose.y, snap.pose.theta
            )
        }
    }
}
