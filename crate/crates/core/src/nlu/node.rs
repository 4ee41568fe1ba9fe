use std::sync::Arc;

use super::answer::{answer_query, QueryContext, DEFAULT_STALENESS};
use super::backend::LmBackend;
use super::grammar::{decode, IntentGrammar};
use super::intent::{Intent, IntentKind};
use super::record::{InteractionRecord, Outcome, Stamps};
use super::utterance::Utterance;
use crate::msgbus::{topics, Bus, BusError, ChatMessage, Envelope, IntentMsg, Message};
use crate::rem::{ExecPhase, NavState};

/// What one `handle` call produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Handled {
    pub interaction: u64,
    pub intent: Intent,
    pub reply: String,
}

/// Turns chat input into intents, answers queries and logs every exchange.
pub struct LlmNode {
    grammar: Arc<IntentGrammar>,
    backend: Arc<dyn LmBackend>,
    next_id: u64,
    ctx: QueryContext,
    pub staleness: f64,
}

impl LlmNode {
    pub fn new(grammar: Arc<IntentGrammar>, backend: Arc<dyn LmBackend>) -> Self {
        Self {
            grammar,
            backend,
            next_id: 1,
            ctx: QueryContext::default(),
            staleness: DEFAULT_STALENESS,
        }
    }

    pub fn context(&self) -> &QueryContext {
        &self.ctx
    }

    /// Track sensor data, detections and activity for the answer path.
    pub fn observe(&mut self, env: &Envelope) {
        match &*env.payload {
            Message::Sensors(s) => self.ctx.snapshot = Some((**s).clone()),
            Message::Detections(d) => self.ctx.detections = d.clone(),
            Message::NavStatus(ns) => {
                self.ctx.activity = match ns.state {
                    NavState::Pending | NavState::Active => {
                        format!("navigating to {}", ns.goal_label.replace('_', " "))
                    }
                    _ => "idle".into(),
                };
            }
            Message::ExecEvent(ev) => {
                self.ctx.activity = match (ev.phase, &ev.detail) {
                    (ExecPhase::Started, Some(d)) => d.clone(),
                    (ExecPhase::Started, None) => self.ctx.activity.clone(),
                    (ExecPhase::Ended, _) => "idle".into(),
                };
            }
            _ => {}
        }
    }

    /// Decode one chat message. `gui_sent` is when the user sent it.
    pub fn handle(&mut self, msg: &ChatMessage, gui_sent: f64, bus: &Bus) -> Result<Handled, BusError> {
        let node_received = bus.now();
        let utt = Utterance::new(&msg.text, node_received);
        let decoded = decode(&utt, &self.grammar, self.backend.as_ref());
        let backend_latency = bus.now() - node_received;
        let id = self.next_id;
        self.next_id += 1;
        let intent = decoded.intent;
        let mut record = InteractionRecord {
            id,
            input_text: msg.text.clone(),
            lm_output: decoded.lm_output,
            predicted_label: intent.matched_label.clone(),
            true_label: msg.true_label.clone(),
            intent_kind: intent.kind.name().into(),
            stamps: Stamps {
                gui_sent: Some(gui_sent),
                node_received: Some(node_received),
                ..Default::default()
            },
            backend_latency: Some(backend_latency),
            outcome: Outcome::default(),
        };
        let reply = match &intent.kind {
            IntentKind::Query { query } => {
                let text = answer_query(*query, &self.ctx, bus.now(), self.staleness);
                let env = bus.publish(topics::CHAT_OUT, ChatMessage::new(&text))?;
                record.stamps.responded = Some(env.stamp);
                bus.publish(topics::LOG_INTERACTION, Message::Interaction(Box::new(record)))?;
                text
            }
            _ => {
                bus.publish(topics::LOG_INTERACTION, Message::Interaction(Box::new(record)))?;
                bus.publish(
                    topics::INTENT,
                    Message::Intent(IntentMsg {
                        interaction: id,
                        intent: intent.clone(),
                    }),
                )?;
                let text = acknowledgment(&intent, &msg.text);
                bus.publish(topics::CHAT_OUT, ChatMessage::new(&text))?;
                text
            }
        };
        Ok(Handled {
            interaction: id,
            intent,
            reply,
        })
    }
}

pub fn acknowledgment(intent: &Intent, input: &str) -> String {
    match &intent.kind {
        IntentKind::NavGoal {
            destination,
            resolved: true,
        } => {
            format!("Navigating to {}.", destination.replace('_', " "))
        }
        IntentKind::NavGoal {
            destination,
            resolved: false,
        } => {
            format!(
                "I don't know a location called '{}'. Stopping.",
                destination.replace('_', " ")
            )
        }
        IntentKind::MotionPattern { pattern } => {
            format!("Executing motion pattern '{}'.", pattern.replace('_', " "))
        }
        IntentKind::Stop => "Stopping.".into(),
        IntentKind::Unknown => format!("Sorry, I did not understand \"{input}\". Stopping for safety."),
        IntentKind::Query { query } => format!("Answering {query} query."),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgbus::Subscription;
    use crate::nlu::{Destination, RuleBackend};

    fn setup() -> (LlmNode, Bus, [Subscription; 3]) {
        let grammar = crate::nlu::IntentGrammar::parse(crate::assets::GRAMMAR)
            .unwrap()
            .with_destinations([Destination {
                label: "kitchen".into(),
                aliases: vec![],
            }]);
        let backend = Arc::new(RuleBackend::new(&grammar));
        let bus = Bus::new();
        let subs = [
            bus.subscribe(topics::INTENT).unwrap(),
            bus.subscribe(topics::CHAT_OUT).unwrap(),
            bus.subscribe(topics::LOG_INTERACTION).unwrap(),
        ];
        (LlmNode::new(Arc::new(grammar), backend), bus, subs)
    }

    #[test]
    fn command_publishes_intent_ack_and_record() {
        let (mut node, bus, [intent, out, log]) = setup();
        let h = node.handle(&ChatMessage::new("move forward"), 0.0, &bus).unwrap();
        assert_eq!(h.intent, Intent::motion("forward", 1.0));
        assert_eq!(intent.drain().len(), 1);
        assert_eq!(out.drain().len(), 1);
        assert_eq!(log.drain().len(), 1);
    }

    #[test]
    fn query_answers_without_intent() {
        let (mut node, bus, [intent, out, log]) = setup();
        node.handle(&ChatMessage::new("where are you"), 0.0, &bus).unwrap();
        assert!(intent.is_empty());
        assert_eq!(out.drain().len(), 1);
        let recs = log.drain();
        assert_eq!(recs.len(), 1);
        match &*recs[0].payload {
            Message::Interaction(r) => assert!(r.stamps.responded.is_some()),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn unknown_is_forwarded_with_notice() {
        let (mut node, bus, [intent, out, _log]) = setup();
        let h = node.handle(&ChatMessage::new("blorp fizzle"), 0.0, &bus).unwrap();
        assert_eq!(h.intent.kind, IntentKind::Unknown);
        assert_eq!(intent.drain().len(), 1);
        assert!(out.drain()[0]
            .payload
            .as_chat()
            .unwrap()
            .text
            .contains("did not understand"));
    }
}
