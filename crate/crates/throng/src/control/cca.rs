//! The per-region flying controller: classifies the congestion case,
//! slows an overtaking subgroup or leads one group out while the others
//! wait, then re-classifies until the region stays clear or disobedience
//! forces a police escalation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::control::semicircle::{plan_semicircle, SemicirclePath};
use crate::control::{ControlError, ControlParams, Escalation, Instruction, PoliceRequest};
use crate::detection::{
    complies, Cause, CongestedRegion, Group, MacroMicroContext, SubGroup,
};
use crate::world::{
    locate, ActiveDirective, Directive, Goal, GridId, GridPartition, Kinematics, Layer,
    Snapshot, Vec2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Idle,
    SlowingSubgroup,
    LeadingStraight,
    LeadingArc,
    Returning,
}

/// Congestion case per the control protocol: a pure speed conflict, a
/// conflicting group with free space ahead, or a fully blocked knot that
/// needs a detour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    I,
    II(u32),
    III(u32),
}

/// Flying-agent state published to the trace every tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaState {
    pub position: Vec2,
    /// Current spotlight or flight speed, m/s.
    pub speed_limit: f64,
    pub phase: Phase,
    pub led_group: Option<u32>,
    pub waiting_groups: BTreeSet<u32>,
    pub assigned_region: CongestedRegion,
}

/// How a region's control episode ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResolutionOutcome {
    Resolved { detected_tick: u64, resolved_tick: u64 },
    Escalated { request: PoliceRequest },
    /// Tick budget ran out first; reported by the harness, never by the
    /// controller itself.
    Unresolved { last_tick: u64 },
}

/// One controller tick's effect on the world.
#[derive(Debug, Clone, Default)]
pub struct ControlOutput {
    /// Per-pedestrian directive updates: Some sets or refreshes, None clears.
    pub assignments: Vec<(u32, Option<ActiveDirective>)>,
    /// Group-level broadcasts that started this tick, for the trace.
    pub issued: Vec<Instruction>,
    pub police: Option<PoliceRequest>,
    /// Present on the tick the episode ends.
    pub outcome: Option<ResolutionOutcome>,
}

/// Picks the control case for a congested region. Speed conflicts with no
/// direction conflict are CaseI; otherwise the first converging group
/// (ascending id) whose front grid is vacant is led straight (CaseII);
/// with every front blocked the smallest group is detoured (CaseIII).
pub fn classify_case(
    region: &CongestedRegion,
    groups: &[Group],
    _subgroups: &BTreeMap<u32, Vec<SubGroup>>,
    partition: &GridPartition,
    vacant: &mut dyn FnMut(GridId) -> bool,
) -> Result<Case, ControlError> {
    let live: Vec<&Group> = region
        .converging_groups
        .iter()
        .filter_map(|id| groups.iter().find(|g| g.id == *id))
        .collect();
    if live.is_empty() {
        return Err(ControlError::InvalidRegion);
    }
    match region.cause {
        Some(Cause::SpeedConflict) => return Ok(Case::I),
        Some(Cause::DirectionConflict) => {}
        None => return Err(ControlError::InvalidRegion),
    }
    for &g in &live {
        if front_grid(g, partition).is_some_and(|grid| vacant(grid)) {
            return Ok(Case::II(g.id));
        }
    }
    let mut pick = live[0];
    for &g in &live[1..] {
        if (g.members.len(), g.id) < (pick.members.len(), pick.id) {
            pick = g;
        }
    }
    Ok(Case::III(pick.id))
}

/// Base grid one cell ahead of the group along its heading; None when the
/// group is stationary or already facing out of the field.
fn front_grid(group: &Group, partition: &GridPartition) -> Option<GridId> {
    let dir = group.heading.normalized()?;
    let probe = group.centroid + dir * partition.cell_size;
    locate(partition, probe, Layer::Base).ok()
}

/// Waypoints along the group's heading through consecutive vacant base
/// grids, ending at the first point past the region's bounding box. A
/// blocked grid on the way is a precondition violation: the caller falls
/// back to a detour.
pub fn plan_straight_lead(
    group: &Group,
    region: &CongestedRegion,
    partition: &GridPartition,
    vacant: &mut dyn FnMut(GridId) -> bool,
) -> Result<Vec<Vec2>, ControlError> {
    let dir = group.heading.normalized().ok_or(ControlError::NoVacantFront(group.id))?;
    let mut waypoints = Vec::new();
    let mut p = group.centroid;
    loop {
        p += dir * partition.cell_size;
        if !region.bounding_box.contains(p) {
            waypoints.push(p);
            return Ok(waypoints);
        }
        match locate(partition, p, Layer::Base) {
            Ok(g) if vacant(g) => waypoints.push(p),
            _ => return Err(ControlError::NoVacantFront(group.id)),
        }
    }
}

/// Live congestion attribution over a fixed grid set: cause precedence and
/// group union mirror region growth, without expanding past the grids.
#[derive(Debug, Clone, PartialEq)]
struct LiveView {
    cause: Option<Cause>,
    converging: Vec<u32>,
    point: Option<Vec2>,
}

fn assess(
    ctx: &MacroMicroContext,
    partition: &GridPartition,
    grids: &BTreeSet<GridId>,
) -> Option<LiveView> {
    let mut view: Option<LiveView> = None;
    for &grid in grids {
        let check = ctx.verdict(partition, grid);
        if !check.congested {
            continue;
        }
        let v = view.get_or_insert(LiveView { cause: None, converging: Vec::new(), point: None });
        match (v.cause, check.cause) {
            (Some(Cause::DirectionConflict), _) => {}
            (_, Some(Cause::DirectionConflict)) => {
                v.cause = Some(Cause::DirectionConflict);
                v.point = check.convergence_point;
            }
            (None, c) => v.cause = c,
            _ => {}
        }
        for id in check.converging_groups {
            if !v.converging.contains(&id) {
                v.converging.push(id);
            }
        }
    }
    if let Some(v) = &mut view {
        v.converging.sort_unstable();
    }
    view
}

fn in_region(partition: &GridPartition, grids: &BTreeSet<GridId>, p: Vec2) -> bool {
    Layer::ALL
        .iter()
        .any(|&layer| matches!(locate(partition, p, layer), Ok(g) if grids.contains(&g)))
}

fn same_kind(a: &Directive, b: &Directive) -> bool {
    matches!(
        (a, b),
        (Directive::Wait, Directive::Wait)
            | (Directive::SlowDown { .. }, Directive::SlowDown { .. })
            | (Directive::FollowSpotlight { .. }, Directive::FollowSpotlight { .. })
    )
}

#[derive(Debug, Clone)]
enum Track {
    Straight { waypoints: Vec<Vec2>, leg: usize },
    /// Fly to the arc entry first, then sweep the half-circle.
    Arc { path: SemicirclePath, traveled: f64, approaching: bool },
}

#[derive(Debug, Clone)]
enum ActiveCase {
    Slowing { members: Vec<u32> },
    Leading { members: Vec<u32>, intent: Vec2, speed: f64, track: Track },
}

/// One flying agent bound to one congested region for its whole episode.
#[derive(Debug, Clone)]
pub struct RegionController {
    pub state: CcaState,
    pub params: ControlParams,
    pub detected_tick: u64,
    case: Option<ActiveCase>,
    /// Directives currently standing on pedestrians, by id.
    issued: BTreeMap<u32, ActiveDirective>,
    /// Wait rosters by group, kept until re-classification addresses them.
    waiting: BTreeMap<u32, Vec<u32>>,
    escalation: Escalation,
    clear_streak: u32,
    clear_start: u64,
    finished: Option<ResolutionOutcome>,
}

impl RegionController {
    pub fn new(region: CongestedRegion, params: ControlParams, detected_tick: u64) -> RegionController {
        let escalation = Escalation::new(params.escalation_threshold, params.escalation_debounce);
        RegionController {
            state: CcaState {
                position: region.bounding_box.center(),
                speed_limit: 0.0,
                phase: Phase::Idle,
                led_group: None,
                waiting_groups: BTreeSet::new(),
                assigned_region: region,
            },
            params,
            detected_tick,
            case: None,
            issued: BTreeMap::new(),
            waiting: BTreeMap::new(),
            escalation,
            clear_streak: 0,
            clear_start: 0,
            finished: None,
        }
    }

    /// Terminal once resolved or escalated.
    pub fn finished(&self) -> Option<&ResolutionOutcome> {
        self.finished.as_ref()
    }

    /// Pedestrians currently commandeered off their own goals; the
    /// harness excludes them from detection.
    pub fn commandeered(&self) -> impl Iterator<Item = u32> + '_ {
        self.issued
            .iter()
            .filter(|(_, a)| !matches!(a.directive, Directive::SlowDown { .. }))
            .map(|(&id, _)| id)
    }

    /// Every pedestrian this controller holds a directive or a queued
    /// wait roster for. Group ids shift as groups shear and merge, so
    /// claims between controllers are settled per pedestrian.
    pub fn addressed_members(&self) -> BTreeSet<u32> {
        let mut ids: BTreeSet<u32> = self.issued.keys().copied().collect();
        for roster in self.waiting.values() {
            ids.extend(roster.iter().copied());
        }
        ids
    }

    /// Advances the controller one tick against the live world view and
    /// returns the directive updates to apply.
    pub fn tick(
        &mut self,
        snap: &Snapshot,
        kinematics: &BTreeMap<u32, Kinematics>,
        ctx: &MacroMicroContext,
        partition: &GridPartition,
        vacant: &mut dyn FnMut(GridId) -> bool,
    ) -> ControlOutput {
        let mut out = ControlOutput::default();
        if self.finished.is_some() {
            return out;
        }
        let now = snap.tick;

        // Disobedience watch over every directive currently standing.
        let mut addressed = 0u32;
        let mut disobeying = 0u32;
        for (&id, active) in &self.issued {
            let (Some(ped), Some(kin)) = (snap.pedestrian(id), kinematics.get(&id)) else {
                continue;
            };
            addressed += 1;
            if !complies(ped, kin, &active.directive, self.params.tol_speed, self.params.tol_angle)
            {
                disobeying += 1;
            }
        }
        let fraction =
            if addressed == 0 { 0.0 } else { f64::from(disobeying) / f64::from(addressed) };
        if self.escalation.observe(fraction) {
            let request = PoliceRequest {
                tick: now,
                region: self.state.assigned_region.clone(),
                fraction,
            };
            self.withdraw_all(&mut out);
            self.case = None;
            self.state.phase = Phase::Idle;
            self.state.speed_limit = 0.0;
            out.police = Some(request.clone());
            self.finished = Some(ResolutionOutcome::Escalated { request });
            out.outcome = self.finished.clone();
            return out;
        }

        match self.state.phase {
            Phase::Idle => self.idle_tick(snap, ctx, partition, vacant, now, &mut out),
            Phase::SlowingSubgroup => self.slowing_tick(snap, ctx, partition, &mut out),
            Phase::LeadingStraight | Phase::LeadingArc => self.leading_tick(snap, &mut out),
            Phase::Returning => self.returning_tick(snap),
        }
        out
    }

    fn withdraw_all(&mut self, out: &mut ControlOutput) {
        out.assignments.extend(self.issued.keys().map(|&id| (id, None)));
        self.issued.clear();
        self.waiting.clear();
        self.state.waiting_groups.clear();
        self.state.led_group = None;
    }

    /// Replaces the standing directives with `broadcasts`; pedestrians no
    /// longer addressed are cleared. A group re-receiving the same
    /// directive kind keeps its original issue tick and logs no event.
    fn replace_assignments(
        &mut self,
        broadcasts: Vec<(u32, Vec<u32>, Directive)>,
        now: u64,
        out: &mut ControlOutput,
    ) {
        let mut next: BTreeMap<u32, ActiveDirective> = BTreeMap::new();
        for (group_id, members, directive) in broadcasts {
            let mut fresh = false;
            for &id in &members {
                let kept = self
                    .issued
                    .get(&id)
                    .filter(|a| same_kind(&a.directive, &directive))
                    .map(|a| a.issue_tick);
                fresh |= kept.is_none();
                next.insert(
                    id,
                    ActiveDirective { directive, issue_tick: kept.unwrap_or(now) },
                );
            }
            if fresh && !members.is_empty() {
                out.issued.push(Instruction {
                    directive,
                    region_key: self.state.assigned_region.key(),
                    group_id,
                    members,
                    issue_tick: now,
                });
            }
        }
        for &id in self.issued.keys() {
            if !next.contains_key(&id) {
                out.assignments.push((id, None));
            }
        }
        for (&id, active) in &next {
            out.assignments.push((id, Some(active.clone())));
        }
        self.issued = next;
    }

    fn idle_tick(
        &mut self,
        snap: &Snapshot,
        ctx: &MacroMicroContext,
        partition: &GridPartition,
        vacant: &mut dyn FnMut(GridId) -> bool,
        now: u64,
        out: &mut ControlOutput,
    ) {
        let grids = self.state.assigned_region.grids.clone();
        let Some(view) = assess(ctx, partition, &grids) else {
            // Clear this tick: drain the waiting queue first, then lift
            // the remaining waits, and build the confirmation streak only
            // once nothing is instructed.
            if self.issued.is_empty() {
                if self.clear_streak == 0 {
                    self.clear_start = now;
                }
                self.clear_streak += 1;
                if self.clear_streak >= self.params.confirmation_window {
                    self.finished = Some(ResolutionOutcome::Resolved {
                        detected_tick: self.detected_tick,
                        resolved_tick: self.clear_start,
                    });
                    out.outcome = self.finished.clone();
                }
            } else if !self.promote_waiting(snap, partition, vacant, now, out) {
                self.withdraw_all(out);
                self.clear_streak = 0;
            }
            return;
        };

        self.clear_streak = 0;
        let region = CongestedRegion {
            grids,
            bounding_box: self.state.assigned_region.bounding_box,
            cause: view.cause,
            converging_groups: view.converging,
            convergence_point: view.point,
        };
        self.state.assigned_region = region.clone();
        match classify_case(&region, &ctx.groups, &ctx.subgroups, partition, vacant) {
            // Groups dissolved between verdict and classification; retry
            // next tick rather than acting on a stale view.
            Err(_) => {}
            Ok(Case::I) => self.start_slowing(ctx, now, out),
            Ok(Case::II(g)) => self.start_leading(g, false, snap, ctx, partition, vacant, now, out),
            Ok(Case::III(g)) => self.start_leading(g, true, snap, ctx, partition, vacant, now, out),
        }
    }

    fn start_slowing(&mut self, ctx: &MacroMicroContext, now: u64, out: &mut ControlOutput) {
        for &gid in &self.state.assigned_region.converging_groups.clone() {
            let Some(mc) = ctx.micro_conflicts.iter().find(|m| m.group_id == gid) else {
                continue;
            };
            let rear = &ctx.subgroups[&gid][mc.front_rank + 1];
            let members = rear.members.clone();
            let directive = Directive::SlowDown { factor: self.params.slowdown_factor };
            let mut broadcasts = vec![(gid, members.clone(), directive)];
            // Waiting groups stay held; see the matching carry-over in
            // start_leading.
            for (&held, roster) in &self.waiting {
                if held != gid {
                    broadcasts.push((held, roster.clone(), Directive::Wait));
                }
            }
            self.replace_assignments(broadcasts, now, out);
            self.case = Some(ActiveCase::Slowing { members });
            self.state.phase = Phase::SlowingSubgroup;
            self.state.led_group = None;
            self.state.waiting_groups = self.waiting.keys().copied().collect();
            self.state.speed_limit = 0.0;
            self.state.position = mc.point;
            return;
        }
        // Speed conflict reported but no live micro pair: transient; the
        // next idle tick reassesses.
    }

    #[allow(clippy::too_many_arguments)]
    fn start_leading(
        &mut self,
        gid: u32,
        detour: bool,
        snap: &Snapshot,
        ctx: &MacroMicroContext,
        partition: &GridPartition,
        vacant: &mut dyn FnMut(GridId) -> bool,
        now: u64,
        out: &mut ControlOutput,
    ) {
        let Some(group) = ctx.groups.iter().find(|g| g.id == gid).cloned() else {
            return;
        };
        self.start_leading_group(group, detour, Some(ctx), snap, partition, vacant, now, out);
    }

    /// Promotes the next waiting group to a lead until the queue is
    /// empty. Waking the whole crowd between episodes forces a
    /// re-detection from a standing start, which shears files apart;
    /// draining the queue group by group keeps every roster whole, and
    /// even the last one leaves under the spotlight rather than being
    /// dropped mid-region after minutes of standing drift. Returns
    /// whether a lead started.
    fn promote_waiting(
        &mut self,
        snap: &Snapshot,
        partition: &GridPartition,
        vacant: &mut dyn FnMut(GridId) -> bool,
        now: u64,
        out: &mut ControlOutput,
    ) -> bool {
        if self.waiting.is_empty() {
            return false;
        }
        let mut order: Vec<(usize, u32, Vec<u32>)> = self
            .waiting
            .iter()
            .map(|(&id, roster)| {
                let live: Vec<u32> =
                    roster.iter().copied().filter(|&p| snap.pedestrian(p).is_some()).collect();
                (live.len(), id, live)
            })
            .collect();
        order.sort();
        for (live, gid, members) in order {
            if live == 0 {
                self.waiting.remove(&gid);
                continue;
            }
            let mut centroid = Vec2::ZERO;
            for &id in &members {
                if let Some(ped) = snap.pedestrian(id) {
                    centroid += ped.position;
                }
            }
            let mut group = Group {
                id: gid,
                members,
                centroid: centroid / live as f64,
                heading: Vec2::ZERO,
                mean_speed: 0.0,
            };
            group.heading = intent_heading(&group, snap);
            let roster = self.waiting.remove(&gid);
            self.start_leading_group(group, false, None, snap, partition, vacant, now, out);
            if matches!(self.case, Some(ActiveCase::Leading { .. })) {
                return true;
            }
            // No plannable track for this roster; put it back and try
            // the next one.
            if let Some(roster) = roster {
                self.waiting.insert(gid, roster);
            }
        }
        false
    }

    #[allow(clippy::too_many_arguments)]
    fn start_leading_group(
        &mut self,
        group: Group,
        detour: bool,
        ctx: Option<&MacroMicroContext>,
        snap: &Snapshot,
        partition: &GridPartition,
        vacant: &mut dyn FnMut(GridId) -> bool,
        now: u64,
        out: &mut ControlOutput,
    ) {
        let region = self.state.assigned_region.clone();
        let gid = group.id;
        let intent = intent_heading(&group, snap);

        let track = if detour {
            match plan_arc_track(snap, partition, &region, group.centroid) {
                Some(track) => Some(track),
                // Too few humans for a chord: fall back to a straight lead.
                None => plan_straight_lead(&group, &region, partition, vacant)
                    .ok()
                    .map(|waypoints| Track::Straight { waypoints, leg: 0 }),
            }
        } else {
            match plan_straight_lead(&group, &region, partition, vacant) {
                Ok(waypoints) => Some(Track::Straight { waypoints, leg: 0 }),
                Err(_) => match ctx {
                    // The lane closed between classification and planning:
                    // detour the smallest group instead.
                    Some(ctx) => {
                        if let Some(pick) = smallest_group(&region, &ctx.groups) {
                            self.start_leading(pick, true, snap, ctx, partition, vacant, now, out);
                        }
                        return;
                    }
                    // Promoted from the queue with a blocked lane: sweep
                    // around whoever blocks it.
                    None => plan_arc_track(snap, partition, &region, group.centroid),
                },
            }
        };
        let Some(track) = track else {
            return;
        };

        let mean_v_max = {
            let speeds: Vec<f64> = group
                .members
                .iter()
                .filter_map(|&id| snap.pedestrian(id))
                .map(|p| p.v_max)
                .collect();
            if speeds.is_empty() {
                return;
            }
            speeds.iter().sum::<f64>() / speeds.len() as f64
        };
        let speed = self.params.spotlight_speed_cap.min(self.params.spotlight_speed_factor * mean_v_max);
        let spotlight = group.centroid;

        let mut broadcasts = vec![(
            gid,
            group.members.clone(),
            Directive::FollowSpotlight { position: spotlight, speed },
        )];
        let mut waiting: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        if let Some(ctx) = ctx {
            for &other in &region.converging_groups {
                if other == gid {
                    continue;
                }
                if let Some(og) = ctx.groups.iter().find(|g| g.id == other) {
                    broadcasts.push((other, og.members.clone(), Directive::Wait));
                    waiting.insert(other, og.members.clone());
                }
            }
        }
        // Groups already waiting stay waiting. They are excluded from the
        // context while instructed, so the loop above cannot re-address
        // them; dropping their roster here would release them mid-episode.
        for (&held, members) in &self.waiting {
            if held != gid && !waiting.contains_key(&held) {
                let members: Vec<u32> =
                    members.iter().copied().filter(|&id| !group.members.contains(&id)).collect();
                if !members.is_empty() {
                    broadcasts.push((held, members.clone(), Directive::Wait));
                    waiting.insert(held, members);
                }
            }
        }
        self.replace_assignments(broadcasts, now, out);
        self.waiting = waiting;
        self.case = Some(ActiveCase::Leading {
            members: group.members.clone(),
            intent,
            speed,
            track: track.clone(),
        });
        self.state.phase = match track {
            Track::Straight { .. } => Phase::LeadingStraight,
            Track::Arc { .. } => Phase::LeadingArc,
        };
        self.state.led_group = Some(gid);
        self.state.waiting_groups = self.waiting.keys().copied().collect();
        self.state.speed_limit = speed;
        self.state.position = spotlight;
    }

    fn slowing_tick(
        &mut self,
        snap: &Snapshot,
        ctx: &MacroMicroContext,
        partition: &GridPartition,
        out: &mut ControlOutput,
    ) {
        let Some(ActiveCase::Slowing { members }) = self.case.take() else {
            self.state.phase = Phase::Idle;
            return;
        };
        // Hover over the slowed pedestrians.
        let live: Vec<Vec2> = members
            .iter()
            .filter_map(|&id| snap.pedestrian(id))
            .map(|p| p.position)
            .collect();
        if let Some(first) = live.first() {
            let sum = live.iter().skip(1).fold(*first, |acc, p| acc + *p);
            self.state.position = sum / live.len() as f64;
        }

        let view = assess(ctx, partition, &self.state.assigned_region.grids);
        let still_slowing = matches!(
            &view,
            Some(v) if v.cause == Some(Cause::SpeedConflict)
        ) && !live.is_empty();
        if still_slowing {
            self.case = Some(ActiveCase::Slowing { members });
        } else {
            // Cleared, or a direction conflict now outranks it: withdraw
            // and let the next idle tick reassess.
            for &id in &members {
                if self.issued.remove(&id).is_some() {
                    out.assignments.push((id, None));
                }
            }
            self.state.phase = Phase::Idle;
        }
    }

    fn leading_tick(&mut self, snap: &Snapshot, out: &mut ControlOutput) {
        let Some(ActiveCase::Leading { members, intent, speed, mut track }) = self.case.take()
        else {
            self.state.phase = Phase::Idle;
            return;
        };
        let step = speed * snap.dt;
        let mut pos = self.state.position;
        match &mut track {
            Track::Straight { waypoints, leg } => {
                let mut remaining = step;
                while remaining > 1e-12 {
                    if *leg >= waypoints.len() {
                        pos += intent * remaining;
                        break;
                    }
                    let to_next = waypoints[*leg] - pos;
                    let dist = to_next.length();
                    if dist <= remaining {
                        pos = waypoints[*leg];
                        *leg += 1;
                        remaining -= dist;
                    } else {
                        pos += to_next * (remaining / dist);
                        remaining = 0.0;
                    }
                }
            }
            Track::Arc { path, traveled, approaching } => {
                if *approaching {
                    let to_entry = path.entry_point() - pos;
                    let dist = to_entry.length();
                    if dist <= step {
                        pos = path.entry_point();
                        *approaching = false;
                    } else {
                        pos += to_entry * (step / dist);
                    }
                } else {
                    *traveled += step;
                    pos = if *traveled <= path.length() {
                        path.point_at(*traveled)
                    } else {
                        path.exit_point() + intent * (*traveled - path.length())
                    };
                }
            }
        }
        self.state.position = pos;

        // Refresh the spotlight on every surviving member.
        let directive = Directive::FollowSpotlight { position: pos, speed };
        let mut live = 0usize;
        let mut centroid = Vec2::ZERO;
        for &id in &members {
            let Some(ped) = snap.pedestrian(id) else { continue };
            live += 1;
            centroid += ped.position;
            if let Some(active) = self.issued.get_mut(&id) {
                active.directive = directive;
                out.assignments.push((id, Some(active.clone())));
            }
        }

        let released = if live == 0 {
            true
        } else {
            let c = centroid / live as f64;
            let bbox = self.state.assigned_region.bounding_box;
            !bbox.contains(c) && (c - bbox.center()).dot(intent) > 0.0
        };
        if released {
            for &id in &members {
                if self.issued.remove(&id).is_some() {
                    out.assignments.push((id, None));
                }
            }
            self.state.phase = Phase::Returning;
            self.state.led_group = None;
            self.state.speed_limit = self.params.return_speed;
        } else {
            self.case = Some(ActiveCase::Leading { members, intent, speed, track });
        }
    }

    fn returning_tick(&mut self, snap: &Snapshot) {
        let target = self.state.assigned_region.bounding_box.center();
        let to_target = target - self.state.position;
        let step = self.params.return_speed * snap.dt;
        if to_target.length() <= step {
            self.state.position = target;
            self.state.phase = Phase::Idle;
            self.state.speed_limit = 0.0;
        } else if let Some(dir) = to_target.normalized() {
            self.state.position += dir * step;
        }
    }
}

/// Semicircular track over the humans inside the region, entered from
/// whichever end of the diameter is nearer `centroid`.
fn plan_arc_track(
    snap: &Snapshot,
    partition: &GridPartition,
    region: &CongestedRegion,
    centroid: Vec2,
) -> Option<Track> {
    let in_area: Vec<(u32, Vec2)> = snap
        .pedestrians
        .iter()
        .filter(|p| in_region(partition, &region.grids, p.position))
        .map(|p| (p.id, p.position))
        .collect();
    let path = plan_semicircle(&in_area).ok()?;
    let path = if centroid.distance(path.exit_point()) < centroid.distance(path.entry_point()) {
        path.reversed()
    } else {
        path
    };
    Some(Track::Arc { path, traveled: 0.0, approaching: true })
}

fn smallest_group(region: &CongestedRegion, groups: &[Group]) -> Option<u32> {
    region
        .converging_groups
        .iter()
        .filter_map(|id| groups.iter().find(|g| g.id == *id))
        .min_by_key(|g| (g.members.len(), g.id))
        .map(|g| g.id)
}

/// Mean goal direction over the group's members: where they intend to go,
/// independent of what they are currently doing.
fn intent_heading(group: &Group, snap: &Snapshot) -> Vec2 {
    let mut sum = Vec2::ZERO;
    for &id in &group.members {
        let Some(ped) = snap.pedestrian(id) else { continue };
        let dir = match ped.goal {
            Goal::Heading { direction } => direction.normalized(),
            Goal::Point { target } => (target - ped.position).normalized(),
        };
        if let Some(d) = dir {
            sum += d;
        }
    }
    sum.normalized()
        .or_else(|| group.heading.normalized())
        .unwrap_or(Vec2::new(1.0, 0.0))
}
