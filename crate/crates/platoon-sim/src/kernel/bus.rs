//! Topic bus with synchronous, per-topic-ordered delivery.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::time::SimTime;

/// Handle returned by [`Bus::subscribe`], used to drop the subscription.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubscriptionId(u64);

type Handler<M> = Rc<RefCell<dyn FnMut(SimTime, &M)>>;

/// In-process publish/subscribe transport.
///
/// A publish invokes every live subscriber of the topic before returning, in
/// subscription order. Nothing is retained: a late subscriber never sees
/// earlier messages.
pub struct Bus<M> {
    topics: HashMap<String, Vec<(SubscriptionId, Handler<M>)>>,
    next_id: u64,
}

impl<M> Default for Bus<M> {
    fn default() -> Self {
        Self::new()
    }
}

impl<M> Bus<M> {
    pub fn new() -> Self {
        Bus {
            topics: HashMap::new(),
            next_id: 0,
        }
    }

    /// Registers `handler` on `topic`. The handler receives the publish time
    /// and a reference to the payload.
    pub fn subscribe(
        &mut self,
        topic: &str,
        handler: impl FnMut(SimTime, &M) + 'static,
    ) -> SubscriptionId {
        assert!(!topic.is_empty(), "topic name must be non-empty");
        let id = SubscriptionId(self.next_id);
        self.next_id += 1;
        self.topics
            .entry(topic.to_owned())
            .or_default()
            .push((id, Rc::new(RefCell::new(handler))));
        id
    }

    /// Drops a subscription. Returns false when the id was not live.
    pub fn unsubscribe(&mut self, id: SubscriptionId) -> bool {
        for subs in self.topics.values_mut() {
            if let Some(pos) = subs.iter().position(|(sid, _)| *sid == id) {
                subs.remove(pos);
                return true;
            }
        }
        false
    }

    /// Delivers `payload` to every subscriber of `topic` synchronously.
    /// Publishing to a topic nobody subscribed to is a no-op. Returns the
    /// number of subscribers reached.
    pub fn publish(&self, publish_time: SimTime, topic: &str, payload: &M) -> usize {
        assert!(!topic.is_empty(), "topic name must be non-empty");
        let Some(subs) = self.topics.get(topic) else {
            return 0;
        };
        for (_, handler) in subs {
            (handler.borrow_mut())(publish_time, payload);
        }
        subs.len()
    }

    pub fn subscriber_count(&self, topic: &str) -> usize {
        self.topics.get(topic).map_or(0, Vec::len)
    }
}
