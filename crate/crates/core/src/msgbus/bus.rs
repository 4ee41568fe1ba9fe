use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, Weak};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::clock::{Clock, SystemClock};
use super::message::{topics, DiagMsg, Message, MessageKind};

pub const DEFAULT_QUEUE_CAPACITY: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BusError {
    #[error("topic name must not be empty")]
    EmptyTopic,
    #[error("topic '{topic}' carries {expected:?} payloads, got {got:?}")]
    SchemaMismatch {
        topic: String,
        expected: MessageKind,
        got: MessageKind,
    },
}

/// A topic name. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Topic(Arc<str>);

impl Topic {
    pub fn new(name: &str) -> Result<Topic, BusError> {
        if name.is_empty() {
            return Err(BusError::EmptyTopic);
        }
        Ok(Topic(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Topic({})", self.0)
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A published message with its bus-assigned sequence number and stamp.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub topic: Topic,
    pub seq: u64,
    pub stamp: f64,
    pub payload: Arc<Message>,
}

#[derive(Debug, Clone)]
pub struct BusConfig {
    pub queue_capacity: usize,
}

impl Default for BusConfig {
    fn default() -> Self {
        Self {
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
        }
    }
}

struct Queue {
    items: Mutex<VecDeque<Envelope>>,
    ready: Condvar,
    capacity: usize,
    dropped: AtomicU64,
}

impl Queue {
    /// Push, evicting the oldest entry when full. Returns true on eviction.
    fn push(&self, env: Envelope) -> bool {
        let mut items = self.items.lock().unwrap();
        let mut evicted = false;
        if items.len() >= self.capacity {
            items.pop_front();
            self.dropped.fetch_add(1, Ordering::Relaxed);
            evicted = true;
        }
        items.push_back(env);
        drop(items);
        self.ready.notify_one();
        evicted
    }
}

struct TopicState {
    name: Topic,
    kind: Mutex<Option<MessageKind>>,
    publish: Mutex<PublishState>,
}

#[derive(Default)]
struct PublishState {
    seq: u64,
    last_stamp: f64,
    subscribers: Vec<Weak<Queue>>,
}

struct Inner {
    topics: Mutex<HashMap<Topic, Arc<TopicState>>>,
    clock: Arc<dyn Clock>,
    config: BusConfig,
    dropped_total: AtomicU64,
}

/// In-process topic-based publish/subscribe bus.
///
/// Topics are created lazily on first publish or subscribe. Delivery is FIFO
/// per topic; there is no replay, so a subscriber sees only messages
/// published after it subscribed. Each subscriber has a bounded queue that
/// drops its oldest entry on overflow; drops are reported on `diag`.
#[derive(Clone)]
pub struct Bus {
    inner: Arc<Inner>,
}

impl Default for Bus {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Bus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bus").field("topics", &self.topic_count()).finish()
    }
}

/// Create an empty bus stamped by the system clock.
pub fn create_bus() -> Bus {
    Bus::new()
}

impl Bus {
    pub fn new() -> Self {
        Self::with_clock(Arc::new(SystemClock::new()))
    }

    pub fn with_clock(clock: Arc<dyn Clock>) -> Self {
        Self::with_config(clock, BusConfig::default())
    }

    pub fn with_config(clock: Arc<dyn Clock>, config: BusConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                topics: Mutex::new(HashMap::new()),
                clock,
                config,
                dropped_total: AtomicU64::new(0),
            }),
        }
    }

    pub fn now(&self) -> f64 {
        self.inner.clock.now()
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        self.inner.clock.clone()
    }

    pub fn topic_count(&self) -> usize {
        self.inner.topics.lock().unwrap().len()
    }

    pub fn topic_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .inner
            .topics
            .lock()
            .unwrap()
            .keys()
            .map(|t| t.as_str().to_string())
            .collect();
        names.sort();
        names
    }

    /// Total messages evicted from any subscriber queue.
    pub fn dropped_total(&self) -> u64 {
        self.inner.dropped_total.load(Ordering::Relaxed)
    }

    pub fn subscriber_count(&self, topic: &str) -> usize {
        let topics = self.inner.topics.lock().unwrap();
        match Topic::new(topic).ok().and_then(|t| topics.get(&t).cloned()) {
            Some(state) => state
                .publish
                .lock()
                .unwrap()
                .subscribers
                .iter()
                .filter(|w| w.strong_count() > 0)
                .count(),
            None => 0,
        }
    }

    fn topic_state(&self, name: &str) -> Result<Arc<TopicState>, BusError> {
        let topic = Topic::new(name)?;
        let mut topics = self.inner.topics.lock().unwrap();
        let state = topics.entry(topic.clone()).or_insert_with(|| {
            Arc::new(TopicState {
                kind: Mutex::new(MessageKind::for_topic(topic.as_str())),
                name: topic,
                publish: Mutex::new(PublishState::default()),
            })
        });
        Ok(state.clone())
    }

    /// Publish a payload. Well-known topics have a fixed payload kind; other
    /// topics adopt the kind of their first payload.
    pub fn publish(&self, topic: &str, payload: impl Into<Message>) -> Result<Envelope, BusError> {
        let payload = payload.into();
        let state = self.topic_state(topic)?;
        {
            let mut kind = state.kind.lock().unwrap();
            match *kind {
                Some(expected) if expected != payload.kind() => {
                    return Err(BusError::SchemaMismatch {
                        topic: topic.to_string(),
                        expected,
                        got: payload.kind(),
                    })
                }
                Some(_) => {}
                None => *kind = Some(payload.kind()),
            }
        }
        let payload = Arc::new(payload);
        let mut evictions = 0u64;
        let env = {
            let mut ps = state.publish.lock().unwrap();
            ps.seq += 1;
            let stamp = self.inner.clock.now().max(ps.last_stamp);
            ps.last_stamp = stamp;
            let env = Envelope {
                topic: state.name.clone(),
                seq: ps.seq,
                stamp,
                payload,
            };
            ps.subscribers.retain(|w| w.strong_count() > 0);
            for sub in ps.subscribers.iter().filter_map(Weak::upgrade) {
                if sub.push(env.clone()) {
                    evictions += 1;
                }
            }
            env
        };
        if evictions > 0 {
            let total = self.inner.dropped_total.fetch_add(evictions, Ordering::Relaxed) + evictions;
            if topic != topics::DIAG {
                let diag = DiagMsg {
                    topic: topic.to_string(),
                    dropped_total: total,
                };
                let _ = self.publish(topics::DIAG, Message::Diag(diag));
            }
        }
        Ok(env)
    }

    /// Subscribe to a topic, creating it if needed.
    pub fn subscribe(&self, topic: &str) -> Result<Subscription, BusError> {
        let state = self.topic_state(topic)?;
        let queue = Arc::new(Queue {
            items: Mutex::new(VecDeque::new()),
            ready: Condvar::new(),
            capacity: self.inner.config.queue_capacity.max(1),
            dropped: AtomicU64::new(0),
        });
        state.publish.lock().unwrap().subscribers.push(Arc::downgrade(&queue));
        Ok(Subscription {
            topic: state.name.clone(),
            queue,
        })
    }
}

/// Receiving end of a topic subscription. Dropping it unsubscribes.
pub struct Subscription {
    topic: Topic,
    queue: Arc<Queue>,
}

impl fmt::Debug for Subscription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subscription")
            .field("topic", &self.topic)
            .field("pending", &self.len())
            .finish()
    }
}

impl Subscription {
    pub fn topic(&self) -> &Topic {
        &self.topic
    }

    pub fn try_recv(&self) -> Option<Envelope> {
        self.queue.items.lock().unwrap().pop_front()
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Option<Envelope> {
        let deadline = Instant::now() + timeout;
        let mut items = self.queue.items.lock().unwrap();
        loop {
            if let Some(env) = items.pop_front() {
                return Some(env);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            items = self.queue.ready.wait_timeout(items, deadline - now).unwrap().0;
        }
    }

    /// Take everything queued so far.
    pub fn drain(&self) -> Vec<Envelope> {
        self.queue.items.lock().unwrap().drain(..).collect()
    }

    /// Drain and keep only the newest envelope.
    pub fn latest(&self) -> Option<Envelope> {
        self.drain().pop()
    }

    pub fn len(&self) -> usize {
        self.queue.items.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Messages this subscriber lost to overflow.
    pub fn dropped(&self) -> u64 {
        self.queue.dropped.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgbus::clock::FakeClock;
    use crate::rem::Twist;

    fn chat(env: &Envelope) -> String {
        match &*env.payload {
            Message::Chat(c) => c.text.clone(),
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn new_bus_is_empty() {
        let bus = create_bus();
        assert_eq!(bus.topic_count(), 0);
    }

    #[test]
    fn publish_creates_topic() {
        let bus = create_bus();
        bus.publish("chat/out", Message::chat("hi")).unwrap();
        assert_eq!(bus.topic_names(), vec!["chat/out"]);
    }

    #[test]
    fn buses_are_isolated() {
        let a = create_bus();
        let b = create_bus();
        let sub = b.subscribe("chat/out").unwrap();
        a.publish("chat/out", Message::chat("x")).unwrap();
        assert!(sub.try_recv().is_none());
    }

    #[test]
    fn single_delivery_in_order() {
        let bus = create_bus();
        let sub = bus.subscribe("chat/out").unwrap();
        let e1 = bus.publish("chat/out", Message::chat("Moving forward")).unwrap();
        let e2 = bus.publish("chat/out", Message::chat("second")).unwrap();
        assert_eq!((e1.seq, e2.seq), (1, 2));
        let got = sub.drain();
        assert_eq!(got.len(), 2);
        assert_eq!(chat(&got[0]), "Moving forward");
        assert_eq!(got[1].seq, 2);
    }

    #[test]
    fn publish_without_subscribers_is_fine() {
        let bus = create_bus();
        let env = bus.publish("chat/out", Message::chat("nobody")).unwrap();
        assert_eq!(env.seq, 1);
    }

    #[test]
    fn no_replay_for_late_subscribers() {
        let bus = create_bus();
        bus.publish("chat/out", Message::chat("early")).unwrap();
        let sub = bus.subscribe("chat/out").unwrap();
        assert!(sub.try_recv().is_none());
        bus.publish("chat/out", Message::chat("late")).unwrap();
        assert_eq!(chat(&sub.try_recv().unwrap()), "late");
    }

    #[test]
    fn fan_out_to_all_subscribers() {
        let bus = create_bus();
        let a = bus.subscribe("chat/out").unwrap();
        let b = bus.subscribe("chat/out").unwrap();
        bus.publish("chat/out", Message::chat("x")).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn schema_mismatch_rejected() {
        let bus = create_bus();
        let err = bus.publish("cmd_vel", Message::chat("nope")).unwrap_err();
        assert!(matches!(err, BusError::SchemaMismatch { .. }));
        bus.publish("custom", Message::chat("a")).unwrap();
        assert!(bus.publish("custom", Twist::zero()).is_err());
    }

    #[test]
    fn empty_topic_rejected() {
        let bus = create_bus();
        assert_eq!(bus.publish("", Message::chat("x")).unwrap_err(), BusError::EmptyTopic);
    }

    #[test]
    fn overflow_drops_oldest_and_reports() {
        let clock = FakeClock::new(0.0);
        let bus = Bus::with_config(Arc::new(clock), BusConfig { queue_capacity: 3 });
        let diag = bus.subscribe("diag").unwrap();
        let sub = bus.subscribe("chat/out").unwrap();
        for i in 0..5 {
            bus.publish("chat/out", Message::chat(format!("{i}"))).unwrap();
        }
        let got: Vec<String> = sub.drain().iter().map(chat).collect();
        assert_eq!(got, vec!["2", "3", "4"]);
        assert_eq!(sub.dropped(), 2);
        assert_eq!(bus.dropped_total(), 2);
        let reports = diag.drain();
        assert_eq!(reports.len(), 2);
        match &*reports[1].payload {
            Message::Diag(d) => assert_eq!(d.dropped_total, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stamps_come_from_clock() {
        let clock = FakeClock::new(100.0);
        let bus = Bus::with_clock(Arc::new(clock.clone()));
        let a = bus.publish("chat/out", Message::chat("a")).unwrap();
        clock.advance(0.25);
        let b = bus.publish("chat/out", Message::chat("b")).unwrap();
        assert_eq!(a.stamp, 100.0);
        assert_eq!(b.stamp, 100.25);
    }

    #[test]
    fn dropped_subscription_unsubscribes() {
        let bus = create_bus();
        let sub = bus.subscribe("chat/out").unwrap();
        assert_eq!(bus.subscriber_count("chat/out"), 1);
        drop(sub);
        bus.publish("chat/out", Message::chat("x")).unwrap();
        assert_eq!(bus.subscriber_count("chat/out"), 0);
    }

    #[test]
    fn recv_timeout_wakes_on_publish() {
        let bus = create_bus();
        let sub = bus.subscribe("chat/out").unwrap();
        let publisher = bus.clone();
        let h = std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(20));
            publisher.publish("chat/out", Message::chat("wake")).unwrap();
        });
        let env = sub.recv_timeout(Duration::from_secs(2)).expect("delivered");
        assert_eq!(chat(&env), "wake");
        h.join().unwrap();
        assert!(sub.recv_timeout(Duration::from_millis(5)).is_none());
    }
}
