/* Event interface of chart `toggle_notes`. Generated code; do not edit. */
#ifndef PCHART_TOGGLE_NOTES_H
#define PCHART_TOGGLE_NOTES_H

void toggle_notes_init(void);
void toggle_notes_event_E(void);
void toggle_notes_tick(void);
void toggle_notes_dump_state(void);

#endif /* PCHART_TOGGLE_NOTES_H */
